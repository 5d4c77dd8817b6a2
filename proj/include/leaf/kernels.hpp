#pragma once

// Data-parallel inner loops. Every kernel has a serial reference path and an
// OpenMP path that produce bit-identical results: each output element is
// computed independently with the same operation order, and any cross-element
// reduction is left to the caller.

#include <cstdint>
#include <span>

namespace leaf::kernels {

enum class Exec { serial, parallel };

struct Posting {
  std::uint32_t doc;
  std::uint32_t tf;
};

// Read-only view of a BM25 inverted index. postings[t] is sorted by doc.
struct Bm25Layout {
  std::span<const std::span<const Posting>> postings;
  std::span<const std::uint32_t> doc_len;
  std::span<const double> idf;
  double avg_doc_len = 1.0;
  double k1 = 1.2;
  double b = 0.75;
};

// Okapi BM25 contribution of one query term to one document.
inline double bm25_term(double idf, double tf, double doc_len, double avg_doc_len,
                        double k1, double b) {
  const double norm = k1 * (1.0 - b + b * doc_len / avg_doc_len);
  return idf * (tf * (k1 + 1.0)) / (tf + norm);
}

// scores.size() must equal the document count. Query terms must be distinct
// vocabulary ids; they are accumulated in the given order.
void bm25_scores(Exec exec, const Bm25Layout& index,
                 std::span<const std::uint32_t> query_terms,
                 std::span<double> scores);

struct SimpoPairView {
  std::span<const double> winner;
  std::span<const double> loser;
};

// Per pair: margin = r_w - r_l - gamma, loss_term = -log sigmoid(margin),
// weight = sigmoid(-margin). All output spans have pairs.size() entries.
void simpo_pair_terms(Exec exec, std::span<const SimpoPairView> pairs, double beta,
                      double gamma, std::span<double> margin,
                      std::span<double> loss_term, std::span<double> weight);

// Numerically stable scalar helpers shared by the kernels and simpo module.
double sigmoid(double z);
double softplus(double z);

}  // namespace leaf::kernels
