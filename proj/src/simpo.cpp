#include "leaf/simpo.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "leaf/error.hpp"
#include "leaf/jsonl.hpp"

namespace leaf::simpo {

using json = nlohmann::json;

SeqLogProbs::SeqLogProbs(std::vector<double> logps) : logps_(std::move(logps)) {
  if (logps_.empty()) throw Error(Errc::invalid_argument, "log-prob sequence is empty");
  for (std::size_t i = 0; i < logps_.size(); ++i) {
    if (!std::isfinite(logps_[i]) || logps_[i] > 0.0) {
      throw Error(Errc::invalid_argument,
                  "log-prob " + std::to_string(i) + " must be finite and <= 0");
    }
  }
}

void SimpoParams::validate() const {
  if (!std::isfinite(beta) || beta <= 0.0) {
    throw Error(Errc::invalid_argument, "beta must be finite and > 0");
  }
  if (!std::isfinite(gamma) || gamma < 0.0) {
    throw Error(Errc::invalid_argument, "gamma must be finite and >= 0");
  }
}

void SimpoBatch::validate() const {
  params.validate();
  if (pairs.empty()) throw Error(Errc::empty_input, "SimPO batch has no pairs");
}

double reward(const SeqLogProbs& seq, const SimpoParams& params) {
  params.validate();
  double sum = 0.0;
  for (const double lp : seq.values()) sum += lp;
  return params.beta * sum / static_cast<double>(seq.size());
}

double pair_prob(const SeqLogProbs& winner, const SeqLogProbs& loser, const SimpoParams& params) {
  return kernels::sigmoid(reward(winner, params) - reward(loser, params) - params.gamma);
}

namespace {

struct PairTerms {
  std::vector<double> margin;
  std::vector<double> loss_term;
  std::vector<double> weight;
};

PairTerms pair_terms(const SimpoBatch& batch, Exec exec) {
  batch.validate();
  std::vector<kernels::SimpoPairView> views;
  views.reserve(batch.pairs.size());
  for (const auto& p : batch.pairs) views.push_back({p.winner.values(), p.loser.values()});
  const std::size_t n = views.size();
  PairTerms t{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  kernels::simpo_pair_terms(exec, views, batch.params.beta, batch.params.gamma, t.margin,
                            t.loss_term, t.weight);
  return t;
}

}  // namespace

double loss(const SimpoBatch& batch, Exec exec) {
  const auto t = pair_terms(batch, exec);
  double sum = 0.0;
  for (const double v : t.loss_term) sum += v;
  return sum / static_cast<double>(t.loss_term.size());
}

Gradients loss_grad(const SimpoBatch& batch, Exec exec) {
  const auto t = pair_terms(batch, exec);
  const double n = static_cast<double>(batch.pairs.size());
  const double beta = batch.params.beta;
  Gradients g;
  g.winner.reserve(batch.pairs.size());
  g.loser.reserve(batch.pairs.size());
  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    const auto& p = batch.pairs[i];
    const double scale = t.weight[i] / n * beta;
    g.winner.emplace_back(p.winner.size(), -scale / static_cast<double>(p.winner.size()));
    g.loser.emplace_back(p.loser.size(), scale / static_cast<double>(p.loser.size()));
  }
  return g;
}

namespace {

// The perturbed pair's loss term with one token's log-prob shifted by delta.
// Every other pair's term is unchanged, so differencing this term (divided by
// the pair count) is the central difference of the batch loss without the
// cancellation against the untouched terms. Positivity of the shifted value is
// not required here, so the sequence is summed raw.
double perturbed_term(const SimpoBatch& batch, std::size_t pair, bool winner,
                      std::size_t token, double delta) {
  const auto& p = batch.pairs[pair];
  const auto& seq = winner ? p.winner : p.loser;
  double sum = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    sum += seq.values()[k] + (k == token ? delta : 0.0);
  }
  const double r_changed = batch.params.beta * sum / static_cast<double>(seq.size());
  const double r_other = reward(winner ? p.loser : p.winner, batch.params);
  const double z = winner ? r_changed - r_other - batch.params.gamma
                          : r_other - r_changed - batch.params.gamma;
  return kernels::softplus(-z);
}

}  // namespace

GradCheckReport grad_check(const SimpoBatch& batch, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::invalid_argument, "h must be > 0");
  const auto g = loss_grad(batch);
  const double n = static_cast<double>(batch.pairs.size());
  GradCheckReport rep;
  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    for (const bool winner : {true, false}) {
      const auto& analytic = winner ? g.winner[i] : g.loser[i];
      for (std::size_t k = 0; k < analytic.size(); ++k) {
        const double fd = (perturbed_term(batch, i, winner, k, h) -
                           perturbed_term(batch, i, winner, k, -h)) /
                          (2.0 * h * n);
        const double a = analytic[k];
        const double abs_err = std::abs(a - fd);
        const double denom = std::max(std::abs(a), std::abs(fd));
        const double rel = denom == 0.0 ? 0.0 : abs_err / denom;
        ++rep.entries;
        rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
        if (rel > rep.max_rel_error || rep.entries == 1) {
          rep.max_rel_error = rel;
          rep.worst_pair = i;
          rep.worst_is_winner = winner;
          rep.worst_token = k;
        }
      }
    }
  }
  return rep;
}

std::vector<SimpoPair> load_pairs_jsonl(const std::filesystem::path& path) {
  std::vector<SimpoPair> out;
  std::unordered_set<std::string> ids;
  jsonl::for_each_line(path, [&](const json& j, std::size_t line_no) {
    const auto where = "line " + std::to_string(line_no) + ": ";
    std::string id = jsonl::get_string(j, "pair_id", line_no);
    if (!ids.insert(id).second) throw Error(Errc::duplicate_id, where + "duplicate pair_id \"" + id + "\"");
    const auto seq = [&](const char* key) {
      const auto it = j.find(key);
      if (it == j.end() || !it->is_array()) {
        throw Error(Errc::malformed_input, where + "field \"" + key + "\" must be an array");
      }
      std::vector<double> v;
      for (const auto& x : *it) {
        if (!x.is_number()) {
          throw Error(Errc::malformed_input, where + "field \"" + key + "\" holds a non-number");
        }
        v.push_back(x.get<double>());
      }
      try {
        return SeqLogProbs(std::move(v));
      } catch (const Error& e) {
        throw Error(e.code(), where + key + ": " + e.what());
      }
    };
    out.push_back({std::move(id), seq("winner_logps"), seq("loser_logps")});
  });
  return out;
}

}  // namespace leaf::simpo
