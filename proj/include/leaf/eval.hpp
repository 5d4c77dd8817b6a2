#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leaf/fact_check.hpp"
#include "leaf/mcq.hpp"

namespace leaf::eval {

struct EvalMetrics {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  // Items whose report has a LEAF score of 1.
  std::size_t filtered_total = 0;
  std::size_t filtered_correct = 0;
  std::optional<double> filtered_accuracy;

  bool operator==(const EvalMetrics&) const = default;
};

using Predictions = std::map<std::string, std::optional<char>>;
using Reports = std::map<std::string, factcheck::FactCheckReport>;

// Items without a prediction, or with none, count as incorrect. A prediction
// or report for an id outside items is an error. Without reports the
// filtered fields stay at zero / none.
EvalMetrics score_run(std::span<const McqItem> items, const Predictions& predictions,
                      const Reports* reports = nullptr);

struct DatasetMetrics {
  std::string name;
  EvalMetrics metrics;

  bool operator==(const DatasetMetrics&) const = default;
};

enum class ReportFormat { text, json, csv };

ReportFormat parse_format(std::string_view name);

inline constexpr std::string_view kCsvHeader =
    "dataset,total,correct,accuracy,filtered_total,filtered_correct,filtered_accuracy";

// Per-dataset rows followed by an "Average" row holding unweighted means of
// accuracy and filtered accuracy (the latter over datasets that have one).
std::string emit_report(std::span<const DatasetMetrics> datasets, ReportFormat format);

// Reads back the datasets of a json-format report.
std::vector<DatasetMetrics> parse_report_json(std::string_view text);

nlohmann::json to_json(const EvalMetrics& m);
EvalMetrics metrics_from_json(const nlohmann::json& j);

}  // namespace leaf::eval
