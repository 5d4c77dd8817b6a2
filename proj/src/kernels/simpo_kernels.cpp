#include <algorithm>
#include <cmath>
#include <cstddef>

#include "leaf/kernels.hpp"

namespace leaf::kernels {
namespace {

constexpr std::size_t kParallelMinPairs = 256;

double length_normalized_reward(std::span<const double> logps, double beta) {
  double sum = 0.0;
  for (const double lp : logps) sum += lp;
  return beta * sum / static_cast<double>(logps.size());
}

void pair_terms(const SimpoPairView& pair, double beta, double gamma, double& margin,
                double& loss_term, double& weight) {
  const double z = length_normalized_reward(pair.winner, beta) -
                   length_normalized_reward(pair.loser, beta) - gamma;
  margin = z;
  // -log sigmoid(z) == softplus(-z)
  loss_term = softplus(-z);
  weight = sigmoid(-z);
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

void simpo_pair_terms(Exec exec, std::span<const SimpoPairView> pairs, double beta,
                      double gamma, std::span<double> margin,
                      std::span<double> loss_term, std::span<double> weight) {
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  if (exec == Exec::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      pair_terms(pairs[i], beta, gamma, margin[i], loss_term[i], weight[i]);
    }
    return;
  }
#pragma omp parallel for schedule(static) if (pairs.size() >= kParallelMinPairs)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    pair_terms(pairs[i], beta, gamma, margin[i], loss_term[i], weight[i]);
  }
}

}  // namespace leaf::kernels
