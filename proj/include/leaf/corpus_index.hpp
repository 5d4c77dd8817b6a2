#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "leaf/kernels.hpp"

namespace leaf::corpus {

struct Document {
  std::string id;
  std::string title;
  std::string text;
};

struct RetrievedDoc {
  std::string doc_id;
  double score = 0.0;
  std::string snippet;

  bool operator==(const RetrievedDoc&) const = default;
};

struct IndexStats {
  std::size_t doc_count = 0;
  double avg_doc_len = 0.0;
  std::size_t vocab_size = 0;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Lowercased runs of Unicode letters and digits (combining marks stay attached
// to the word they follow). Everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

class Retriever {
 public:
  virtual ~Retriever() = default;
  // At most k passages, best first. Throws on k == 0.
  virtual std::vector<RetrievedDoc> retrieve(std::string_view query,
                                             std::size_t k) const = 0;
};

// Immutable Okapi BM25 index. Safe to share across threads once built.
class Bm25Index final : public Retriever {
 public:
  static constexpr int kFormatVersion = 1;
  static constexpr std::string_view kFormatName = "leaf-bm25-index";

  static Bm25Index build(std::span<const Document> docs, Bm25Params params = {});

  std::vector<RetrievedDoc> retrieve(std::string_view query,
                                     std::size_t k) const override;

  // Raw BM25 score of every document for a query, in corpus order.
  std::vector<double> score_all(std::string_view query,
                                kernels::Exec exec = kernels::Exec::serial) const;

  const IndexStats& stats() const { return stats_; }
  const Bm25Params& params() const { return params_; }
  const std::vector<Document>& documents() const { return docs_; }
  bool contains(std::string_view doc_id) const;

  // Self-describing JSON: {"format", "version", "params", "stats", "docs",
  // "vocab", "postings"}.
  void save(std::ostream& out) const;
  static Bm25Index load(std::istream& in);
  void save_file(const std::filesystem::path& path) const;
  static Bm25Index load_file(const std::filesystem::path& path);

  Bm25Index(Bm25Index&&) noexcept;
  Bm25Index& operator=(Bm25Index&&) noexcept;
  Bm25Index(const Bm25Index&) = delete;
  Bm25Index& operator=(const Bm25Index&) = delete;
  ~Bm25Index() override;

 private:
  Bm25Index() = default;
  void finalize();
  std::vector<std::uint32_t> query_terms(std::string_view query) const;
  kernels::Bm25Layout layout() const;
  // BM25 of one document in quad precision, rounded to double.
  double rescore(std::uint32_t doc, std::span<const std::uint32_t> terms) const;

  std::vector<Document> docs_;
  Bm25Params params_;
  IndexStats stats_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::uint32_t> term_ids_;
  std::unordered_map<std::string, std::uint32_t> doc_ids_;
  std::vector<std::vector<kernels::Posting>> postings_;
  std::vector<std::uint32_t> doc_len_;
  std::vector<double> idf_;
  // Span table handed to the kernels; rebuilt by finalize().
  std::vector<std::span<const kernels::Posting>> posting_spans_;
};

// {"id": str, "title": str, "text": str} per line. Blank lines are skipped.
std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path);

}  // namespace leaf::corpus
