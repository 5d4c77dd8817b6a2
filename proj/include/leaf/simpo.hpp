#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "leaf/kernels.hpp"

namespace leaf::simpo {

using kernels::Exec;

// Per-token log-probabilities of one response: non-empty, finite, <= 0.
class SeqLogProbs {
 public:
  explicit SeqLogProbs(std::vector<double> logps);

  std::span<const double> values() const noexcept { return logps_; }
  std::size_t size() const noexcept { return logps_.size(); }

 private:
  std::vector<double> logps_;
};

struct SimpoParams {
  double beta = 2.5;
  double gamma = 1.4;

  // beta > 0 and gamma >= 0, both finite.
  void validate() const;
};

struct SimpoPair {
  std::string id;
  SeqLogProbs winner;
  SeqLogProbs loser;
};

struct SimpoBatch {
  std::vector<SimpoPair> pairs;
  SimpoParams params;

  // Non-empty pairs and valid params.
  void validate() const;
};

// beta / |y| * sum(logps)
double reward(const SeqLogProbs& seq, const SimpoParams& params);

// sigmoid(r_w - r_l - gamma)
double pair_prob(const SeqLogProbs& winner, const SeqLogProbs& loser, const SimpoParams& params);

// Mean over pairs of softplus(-(r_w - r_l - gamma)).
double loss(const SimpoBatch& batch, Exec exec = Exec::serial);

struct Gradients {
  // Same shape as the batch: one vector per pair, one entry per token.
  std::vector<std::vector<double>> winner;
  std::vector<std::vector<double>> loser;
};

Gradients loss_grad(const SimpoBatch& batch, Exec exec = Exec::serial);

struct GradCheckReport {
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  // Where max_rel_error occurred.
  std::size_t worst_pair = 0;
  bool worst_is_winner = true;
  std::size_t worst_token = 0;
};

// Central differences with step h against loss_grad(). Only the perturbed
// pair's term of the mean loss is differenced; the other terms are constant
// and would only add cancellation error. Relative error is
// |a - f| / max(|a|, |f|), taken as 0 when both vanish.
GradCheckReport grad_check(const SimpoBatch& batch, double h = 1e-5);

// {"pair_id", "winner_logps", "loser_logps"} per line.
std::vector<SimpoPair> load_pairs_jsonl(const std::filesystem::path& path);

}  // namespace leaf::simpo
