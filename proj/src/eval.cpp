#include "leaf/eval.hpp"

#include <cstdio>
#include <sstream>

#include "leaf/error.hpp"

namespace leaf::eval {

using json = nlohmann::json;

EvalMetrics score_run(std::span<const McqItem> items, const Predictions& predictions,
                      const Reports* reports) {
  std::map<std::string_view, const McqItem*> by_id;
  for (const auto& item : items) by_id.emplace(item.id, &item);
  for (const auto& [id, answer] : predictions) {
    if (!by_id.contains(id)) throw Error(Errc::unknown_id, "prediction for unknown id \"" + id + "\"");
  }
  if (reports) {
    for (const auto& [id, report] : *reports) {
      if (!by_id.contains(id)) throw Error(Errc::unknown_id, "report for unknown id \"" + id + "\"");
    }
  }

  EvalMetrics m;
  m.total = items.size();
  for (const auto& item : items) {
    const auto p = predictions.find(item.id);
    const bool correct = p != predictions.end() && p->second && *p->second == item.gold;
    if (correct) ++m.correct;
    if (!reports) continue;
    const auto r = reports->find(item.id);
    if (r != reports->end() && !r->second.verdicts.empty() && r->second.leaf_score == 1.0) {
      ++m.filtered_total;
      if (correct) ++m.filtered_correct;
    }
  }
  m.accuracy = m.total == 0 ? 0.0 : static_cast<double>(m.correct) / static_cast<double>(m.total);
  if (m.filtered_total > 0) {
    m.filtered_accuracy =
        static_cast<double>(m.filtered_correct) / static_cast<double>(m.filtered_total);
  }
  return m;
}

ReportFormat parse_format(std::string_view name) {
  if (name == "text") return ReportFormat::text;
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw Error(Errc::unsupported_format,
              "unknown report format \"" + std::string(name) + "\" (text, json, csv)");
}

json to_json(const EvalMetrics& m) {
  return {{"total", m.total},
          {"correct", m.correct},
          {"accuracy", m.accuracy},
          {"filtered_total", m.filtered_total},
          {"filtered_correct", m.filtered_correct},
          {"filtered_accuracy", m.filtered_accuracy ? json(*m.filtered_accuracy) : json(nullptr)}};
}

EvalMetrics metrics_from_json(const json& j) {
  try {
    EvalMetrics m;
    m.total = j.at("total").get<std::size_t>();
    m.correct = j.at("correct").get<std::size_t>();
    m.accuracy = j.at("accuracy").get<double>();
    m.filtered_total = j.at("filtered_total").get<std::size_t>();
    m.filtered_correct = j.at("filtered_correct").get<std::size_t>();
    const auto& fa = j.at("filtered_accuracy");
    if (!fa.is_null()) m.filtered_accuracy = fa.get<double>();
    return m;
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_input, std::string("bad metrics object: ") + e.what());
  }
}

namespace {

struct Average {
  double accuracy = 0.0;
  std::optional<double> filtered_accuracy;
};

Average average(std::span<const DatasetMetrics> datasets) {
  Average a;
  double acc = 0.0;
  double filt = 0.0;
  std::size_t filt_n = 0;
  for (const auto& d : datasets) {
    acc += d.metrics.accuracy;
    if (d.metrics.filtered_accuracy) {
      filt += *d.metrics.filtered_accuracy;
      ++filt_n;
    }
  }
  a.accuracy = acc / static_cast<double>(datasets.size());
  if (filt_n > 0) a.filtered_accuracy = filt / static_cast<double>(filt_n);
  return a;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string emit_report(std::span<const DatasetMetrics> datasets, ReportFormat format) {
  if (datasets.empty()) throw Error(Errc::empty_input, "report needs at least one dataset");
  const Average avg = average(datasets);
  const auto opt = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string("-"); };

  switch (format) {
    case ReportFormat::json: {
      json rows = json::array();
      for (const auto& d : datasets) rows.push_back({{"name", d.name}, {"metrics", to_json(d.metrics)}});
      json out = {{"datasets", std::move(rows)},
                  {"average",
                   {{"accuracy", avg.accuracy},
                    {"filtered_accuracy",
                     avg.filtered_accuracy ? json(*avg.filtered_accuracy) : json(nullptr)}}}};
      return out.dump(2) + "\n";
    }
    case ReportFormat::csv: {
      std::ostringstream out;
      out << kCsvHeader << '\n';
      for (const auto& d : datasets) {
        const auto& m = d.metrics;
        out << csv_field(d.name) << ',' << m.total << ',' << m.correct << ',' << fixed(m.accuracy)
            << ',' << m.filtered_total << ',' << m.filtered_correct << ','
            << (m.filtered_accuracy ? fixed(*m.filtered_accuracy) : "") << '\n';
      }
      out << "Average,,," << fixed(avg.accuracy) << ",,,"
          << (avg.filtered_accuracy ? fixed(*avg.filtered_accuracy) : "") << '\n';
      return out.str();
    }
    case ReportFormat::text: {
      std::size_t width = std::string_view("Average").size();
      for (const auto& d : datasets) width = std::max(width, d.name.size());
      std::ostringstream out;
      out << pad("dataset", width) << "  " << pad("n", 6) << "  " << pad("accuracy", 8) << "  "
          << pad("n_pass", 6) << "  filtered_accuracy\n";
      for (const auto& d : datasets) {
        const auto& m = d.metrics;
        out << pad(d.name, width) << "  " << pad(std::to_string(m.total), 6) << "  "
            << pad(fixed(m.accuracy), 8) << "  " << pad(std::to_string(m.filtered_total), 6)
            << "  " << opt(m.filtered_accuracy) << '\n';
      }
      out << pad("Average", width) << "  " << pad("", 6) << "  " << pad(fixed(avg.accuracy), 8)
          << "  " << pad("", 6) << "  " << opt(avg.filtered_accuracy) << '\n';
      return out.str();
    }
  }
  throw Error(Errc::unsupported_format, "unknown report format");
}

std::vector<DatasetMetrics> parse_report_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::malformed_input, std::string("report is not JSON: ") + e.what());
  }
  std::vector<DatasetMetrics> out;
  try {
    for (const auto& row : j.at("datasets")) {
      out.push_back({row.at("name").get<std::string>(), metrics_from_json(row.at("metrics"))});
    }
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_input, std::string("bad report: ") + e.what());
  }
  return out;
}

}  // namespace leaf::eval
