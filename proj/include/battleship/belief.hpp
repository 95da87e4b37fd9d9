#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "battleship/board.hpp"
#include "battleship/question.hpp"
#include "battleship/rng.hpp"

namespace battleship {

// H_b(p) in bits, with 0*log2(0) == 0.
inline double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) throw std::domain_error("binary_entropy argument outside [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Expected information gain of a yes/no question through a binary symmetric
// channel with flip probability epsilon, given predictive yes-probability p.
// Exactly 0 at p in {0,1}: the answer is already determined.
inline double eig_bsc(double p, double epsilon) {
  if (p == 0.0 || p == 1.0) return 0.0;
  return binary_entropy(epsilon + (1.0 - 2.0 * epsilon) * p) - binary_entropy(epsilon);
}

inline double answer_yes_probability(double p, double epsilon) {
  return epsilon + (1.0 - 2.0 * epsilon) * p;
}

// Per-cell hit probabilities under the current belief; revealed cells carry 0.
struct HitGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> p;

  double at(Coord c) const { return p[static_cast<std::size_t>(c.row) * cols + c.col]; }

  // Highest-probability hidden cell, row-major on ties.
  std::pair<Coord, double> best(const PartialBoard& partial) const {
    Coord best_coord{-1, -1};
    double best_p = -1.0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const Coord u{r, c};
        if (!partial.is_hidden(u)) continue;
        const double v = at(u);
        if (v > best_p) {
          best_p = v;
          best_coord = u;
        }
      }
    if (best_coord.row < 0) throw std::invalid_argument("no hidden cells remain");
    return {best_coord, best_p};
  }
};

// Weighted particle approximation of the Captain's posterior over boards.
// Weights are kept in log space and renormalized after every update; values
// are immutable, updates return a new belief.
class ParticleBelief {
 public:
  static ParticleBelief init(const BoardConfig& config, const PartialBoard& partial, int n,
                             double epsilon, Rng& rng) {
    if (n < 1) throw std::invalid_argument("particle count must be >= 1");
    if (epsilon < 0.0 || epsilon > 0.5) throw std::invalid_argument("epsilon must be in [0, 0.5]");
    ParticleBelief b;
    b.config_ = config;
    b.epsilon_ = epsilon;
    b.target_n_ = n;
    b.particles_ = sample_boards_consistent(config, partial, n, rng);
    b.log_w_.assign(n, -std::log(static_cast<double>(n)));
    return b;
  }

  const BoardConfig& config() const { return config_; }
  double epsilon() const { return epsilon_; }
  int target_size() const { return target_n_; }
  std::span<const Board> particles() const { return particles_; }
  const ReplayLog& replay_log() const { return log_; }

  std::vector<double> weights() const {
    std::vector<double> w(log_w_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w_[i]);
    return w;
  }

  double ess() const {
    double sum_sq = 0.0;
    for (double lw : log_w_) {
      const double w = std::exp(lw);
      sum_sq += w * w;
    }
    return 1.0 / sum_sq;
  }

  // Eq-style reweighting by a noisy answer: match keeps (1-eps), mismatch
  // keeps eps. Appends to the replay log; resamples when ESS drops below N/2.
  ParticleBelief update_answer(const Question& q, bool observed, const PartialBoard& partial,
                               Rng& rng) const {
    const AnswerVector av = answer_vector(q, particles_, partial);
    ParticleBelief next = reweight_by_answer(av, observed);
    if (!next.valid_mass_)
      throw DepletedError("depleted: answer contradicts every particle (epsilon = 0)");
    next.log_.push_back({q, observed, partial});
    if (next.ess() < next.target_n_ / 2.0) next = next.resample(rng);
    return next;
  }

  // Hypothetical one-step update used by the lookahead: no resampling, no log
  // append, zero-mass branches reported instead of thrown.
  std::pair<ParticleBelief, bool> branch_update(const AnswerVector& av, bool observed) const {
    ParticleBelief next = reweight_by_answer(av, observed);
    const bool has_mass = next.valid_mass_;
    return {std::move(next), has_mass};
  }

  // Hard evidence from a reveal: particles disagreeing at the target drop to
  // zero mass. Rejuvenates with fresh consistent particles (reweighted by the
  // replayed answer history) when the surviving ESS falls below N/2.
  ParticleBelief update_reveal(Coord target, CellValue observed_cell,
                               const PartialBoard& partial_after, Rng& rng) const {
    ParticleBelief next = *this;
    // Disagreeing particles carry exactly zero mass; drop them outright so
    // every retained particle stays consistent with the synchronized partial.
    next.particles_.clear();
    next.log_w_.clear();
    for (std::size_t j = 0; j < particles_.size(); ++j) {
      if (particles_[j].at(target) != observed_cell) continue;
      next.particles_.push_back(particles_[j]);
      next.log_w_.push_back(log_w_[j]);
    }
    if (next.particles_.empty()) return rejuvenated(partial_after, rng);
    next.normalize();
    if (next.ess() < next.target_n_ / 2.0) return next.rejuvenate_merge(partial_after, rng);
    return next;
  }

  // Systematic resampling back to N equally weighted particles.
  ParticleBelief resample(Rng& rng) const {
    ParticleBelief next = *this;
    next.particles_ = systematic_draw(particles_, log_w_, target_n_, rng);
    next.log_w_.assign(target_n_, -std::log(static_cast<double>(target_n_)));
    return next;
  }

  double yes_probability(const Question& q, const PartialBoard& partial) const {
    double p = 0.0;
    for (std::size_t j = 0; j < particles_.size(); ++j)
      if (evaluate(q, particles_[j], partial)) p += std::exp(log_w_[j]);
    return std::min(p, 1.0);
  }

  double yes_probability(const AnswerVector& av) const {
    double p = 0.0;
    for (std::size_t j = 0; j < av.bits.size(); ++j)
      if (av.bits[j]) p += std::exp(log_w_[j]);
    return std::min(p, 1.0);
  }

  double eig(const Question& q, const PartialBoard& partial) const {
    return eig_bsc(yes_probability(q, partial), epsilon_);
  }

  double eig(const AnswerVector& av) const { return eig_bsc(yes_probability(av), epsilon_); }

  HitGrid hit_probability_grid(const PartialBoard& partial) const {
    HitGrid grid{partial.rows(), partial.cols(),
                 std::vector<double>(partial.cells().size(), 0.0)};
    for (std::size_t j = 0; j < particles_.size(); ++j) {
      const double w = std::exp(log_w_[j]);
      const auto& cells = particles_[j].cells();
      for (std::size_t u = 0; u < cells.size(); ++u)
        if (partial.cells()[u] == kHidden && cells[u] != kWater) grid.p[u] += w;
    }
    for (double& v : grid.p) v = std::min(v, 1.0);
    return grid;
  }

  // Highest-weight particles (for trajectory snapshots).
  std::vector<std::pair<Board, double>> top_particles(int m) const {
    std::vector<std::size_t> order(particles_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return log_w_[a] > log_w_[b]; });
    std::vector<std::pair<Board, double>> out;
    for (std::size_t i = 0; i < order.size() && static_cast<int>(out.size()) < m; ++i)
      out.emplace_back(particles_[order[i]], std::exp(log_w_[order[i]]));
    return out;
  }

 private:
  ParticleBelief reweight_by_answer(const AnswerVector& av, bool observed) const {
    const double log_match = std::log1p(-epsilon_);
    const double log_mismatch =
        epsilon_ > 0.0 ? std::log(epsilon_) : -std::numeric_limits<double>::infinity();
    ParticleBelief next = *this;
    for (std::size_t j = 0; j < particles_.size(); ++j) {
      const bool predicted = av.bits[j] != 0;
      next.log_w_[j] += predicted == observed ? log_match : log_mismatch;
    }
    next.valid_mass_ = next.normalize();
    return next;
  }

  // Renormalizes in log space; returns false when total mass is zero.
  bool normalize() {
    double max_lw = -std::numeric_limits<double>::infinity();
    for (double lw : log_w_) max_lw = std::max(max_lw, lw);
    if (!std::isfinite(max_lw)) return false;
    double sum = 0.0;
    for (double lw : log_w_) sum += std::exp(lw - max_lw);
    const double log_total = max_lw + std::log(sum);
    for (double& lw : log_w_) lw -= log_total;
    return true;
  }

  double replay_log_likelihood(const Board& b) const {
    const double log_match = std::log1p(-epsilon_);
    const double log_mismatch =
        epsilon_ > 0.0 ? std::log(epsilon_) : -std::numeric_limits<double>::infinity();
    double lw = 0.0;
    for (const QuestionAnswer& qa : log_) {
      const bool predicted = evaluate(qa.question, b, qa.context);
      lw += predicted == qa.answer ? log_match : log_mismatch;
      if (!std::isfinite(lw)) break;
    }
    return lw;
  }

  // Full replacement: every current particle is inconsistent with the reveal.
  ParticleBelief rejuvenated(const PartialBoard& partial_after, Rng& rng) const {
    ParticleBelief next = *this;
    next.particles_ = sample_boards_consistent(config_, partial_after, target_n_, rng);
    next.log_w_.resize(target_n_);
    for (int j = 0; j < target_n_; ++j)
      next.log_w_[j] = replay_log_likelihood(next.particles_[j]);
    if (!next.normalize())
      throw DepletedError("depleted: replayed history contradicts every fresh particle");
    return next.resample(rng);
  }

  // Survivor/fresh 50-50 mixture, then resample back to N. Both halves target
  // the same posterior, so the mixture stays a consistent approximation.
  ParticleBelief rejuvenate_merge(const PartialBoard& partial_after, Rng& rng) const {
    std::vector<Board> fresh = sample_boards_consistent(config_, partial_after, target_n_, rng);
    std::vector<double> fresh_lw(fresh.size());
    for (std::size_t j = 0; j < fresh.size(); ++j)
      fresh_lw[j] = replay_log_likelihood(fresh[j]);

    double max_lw = -std::numeric_limits<double>::infinity();
    for (double lw : fresh_lw) max_lw = std::max(max_lw, lw);
    if (!std::isfinite(max_lw)) return resample(rng);  // history kills all fresh draws
    double sum = 0.0;
    for (double lw : fresh_lw) sum += std::exp(lw - max_lw);
    const double log_total = max_lw + std::log(sum);

    ParticleBelief merged = *this;
    merged.particles_.reserve(particles_.size() + fresh.size());
    merged.log_w_.reserve(particles_.size() + fresh.size());
    const double half = std::log(0.5);
    for (double& lw : merged.log_w_) lw += half;
    for (std::size_t j = 0; j < fresh.size(); ++j) {
      merged.particles_.push_back(std::move(fresh[j]));
      merged.log_w_.push_back(fresh_lw[j] - log_total + half);
    }
    return merged.resample(rng);
  }

  static std::vector<Board> systematic_draw(const std::vector<Board>& particles,
                                            const std::vector<double>& log_w, int n, Rng& rng) {
    std::vector<Board> out;
    out.reserve(n);
    const double step = 1.0 / n;
    double position = rng.unit() * step;
    double cumulative = 0.0;
    std::size_t j = 0;
    double wj = std::exp(log_w[0]);
    for (int i = 0; i < n; ++i) {
      while (cumulative + wj < position && j + 1 < particles.size()) {
        cumulative += wj;
        ++j;
        wj = std::exp(log_w[j]);
      }
      out.push_back(particles[j]);
      position += step;
    }
    return out;
  }

  BoardConfig config_;
  double epsilon_ = 0.1;
  int target_n_ = 0;
  std::vector<Board> particles_;
  std::vector<double> log_w_;  // normalized: logsumexp == 0
  ReplayLog log_;
  bool valid_mass_ = true;  // set by reweight_by_answer
};

}  // namespace battleship
