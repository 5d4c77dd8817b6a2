#include <algorithm>
#include <cstddef>

#include "leaf/kernels.hpp"

namespace leaf::kernels {
namespace {

// Below this many documents the thread fork costs more than the scoring.
constexpr std::size_t kParallelMinDocs = 2048;
constexpr std::uint32_t kBlockDocs = 1024;

void scores_term_at_a_time(const Bm25Layout& index,
                           std::span<const std::uint32_t> query_terms,
                           std::span<double> scores) {
  std::fill(scores.begin(), scores.end(), 0.0);
  for (const std::uint32_t term : query_terms) {
    const double idf = index.idf[term];
    for (const Posting& p : index.postings[term]) {
      scores[p.doc] += bm25_term(idf, p.tf, index.doc_len[p.doc], index.avg_doc_len,
                                 index.k1, index.b);
    }
  }
}

// Term-at-a-time restricted to documents [lo, hi). Each document still sees
// the query terms in order, so scores match the serial path bit for bit.
void scores_doc_block(const Bm25Layout& index, std::span<const std::uint32_t> query_terms,
                      std::uint32_t lo, std::uint32_t hi, std::span<double> scores) {
  std::fill(scores.begin() + lo, scores.begin() + hi, 0.0);
  for (const std::uint32_t term : query_terms) {
    const double idf = index.idf[term];
    const auto postings = index.postings[term];
    auto it = std::lower_bound(postings.begin(), postings.end(), lo,
                               [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    for (; it != postings.end() && it->doc < hi; ++it) {
      scores[it->doc] += bm25_term(idf, it->tf, index.doc_len[it->doc], index.avg_doc_len,
                                   index.k1, index.b);
    }
  }
}

void scores_blocked(const Bm25Layout& index, std::span<const std::uint32_t> query_terms,
                    std::span<double> scores) {
  const auto n_docs = static_cast<std::uint32_t>(scores.size());
  const auto n_blocks = static_cast<std::ptrdiff_t>((n_docs + kBlockDocs - 1) / kBlockDocs);
#pragma omp parallel for schedule(dynamic) if (scores.size() >= kParallelMinDocs)
  for (std::ptrdiff_t blk = 0; blk < n_blocks; ++blk) {
    const auto lo = static_cast<std::uint32_t>(blk) * kBlockDocs;
    const auto hi = std::min(n_docs, lo + kBlockDocs);
    scores_doc_block(index, query_terms, lo, hi, scores);
  }
}

}  // namespace

void bm25_scores(Exec exec, const Bm25Layout& index,
                 std::span<const std::uint32_t> query_terms,
                 std::span<double> scores) {
  if (exec == Exec::serial) {
    scores_term_at_a_time(index, query_terms, scores);
  } else {
    scores_blocked(index, query_terms, scores);
  }
}

}  // namespace leaf::kernels
