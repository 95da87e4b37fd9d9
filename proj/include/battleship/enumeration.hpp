#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "battleship/board.hpp"
#include "battleship/question.hpp"

namespace battleship {

// Exhaustive enumeration of the feasible set. Only usable on small configs;
// the guard caps the number of enumerated configurations.
inline constexpr std::size_t kEnumerationGuard = 1'000'000;

namespace detail {

template <typename Sink>
inline void enumerate_rec(const BoardConfig& config,
                          const std::vector<std::vector<MaskedPlacement>>& per_ship,
                          std::vector<const MaskedPlacement*>& chosen, std::size_t ship,
                          CellMask& used, std::size_t& count, std::size_t guard, Sink&& sink) {
  if (ship == per_ship.size()) {
    if (++count > guard) throw std::runtime_error("enumeration guard exceeded");
    std::vector<Placement> placements;
    placements.reserve(chosen.size());
    for (const auto* mp : chosen) placements.push_back(mp->placement);
    sink(board_from_placements(config, placements));
    return;
  }
  for (const auto& mp : per_ship[ship]) {
    if (used.intersects(mp.cells)) continue;
    CellMask saved = used;
    used.merge(config.allow_touching ? mp.cells : mp.dilated);
    chosen[ship] = &mp;
    enumerate_rec(config, per_ship, chosen, ship + 1, used, count, guard,
                  std::forward<Sink>(sink));
    used = saved;
  }
}

template <typename Sink>
inline void enumerate_boards_impl(const BoardConfig& config, const PartialBoard* partial,
                                  std::size_t guard, Sink&& sink) {
  config.validate();
  std::vector<std::vector<MaskedPlacement>> per_ship;
  for (const auto& ship : config.ships) {
    std::vector<MaskedPlacement> list;
    for (const Placement& p : all_placements(config.rows, config.cols, ship.length)) {
      if (partial != nullptr && !placement_consistent(p, ship.color, *partial)) continue;
      list.push_back(make_masked(p, config.rows, config.cols));
    }
    per_ship.push_back(std::move(list));
  }
  std::vector<const MaskedPlacement*> chosen(per_ship.size());
  CellMask used(config.rows * config.cols);
  std::size_t count = 0;
  enumerate_rec(config, per_ship, chosen, 0, used, count, guard, std::forward<Sink>(sink));
}

}  // namespace detail

inline std::vector<Board> enumerate_boards(const BoardConfig& config,
                                           std::size_t guard = kEnumerationGuard) {
  std::vector<Board> out;
  detail::enumerate_boards_impl(config, nullptr, guard, [&](Board b) { out.push_back(std::move(b)); });
  return out;
}

inline std::vector<Board> enumerate_consistent_boards(const BoardConfig& config,
                                                      const PartialBoard& partial,
                                                      std::size_t guard = kEnumerationGuard) {
  std::vector<Board> out;
  detail::enumerate_boards_impl(config, &partial, guard,
                                [&](Board b) { out.push_back(std::move(b)); });
  return out;
}

// Exact posterior over the enumerated feasible set: uniform prior, hard
// conditioning on the partial view, one binary-symmetric-channel factor per
// logged answer. Test oracle for the particle approximation.
struct ExactPosterior {
  std::vector<Board> boards;
  std::vector<double> probs;

  double yes_probability(const Question& q, const PartialBoard& partial) const {
    double p = 0.0;
    for (std::size_t i = 0; i < boards.size(); ++i)
      if (evaluate(q, boards[i], partial)) p += probs[i];
    return p;
  }

  // Per-cell hit marginals; revealed cells carry 0.
  std::vector<double> cell_marginals(const PartialBoard& partial) const {
    std::vector<double> m(partial.cells().size(), 0.0);
    for (std::size_t i = 0; i < boards.size(); ++i) {
      const auto& cells = boards[i].cells();
      for (std::size_t u = 0; u < cells.size(); ++u)
        if (partial.cells()[u] == kHidden && cells[u] != kWater) m[u] += probs[i];
    }
    return m;
  }
};

inline ExactPosterior exact_posterior(const BoardConfig& config, const PartialBoard& partial,
                                      const ReplayLog& log, double epsilon,
                                      std::size_t guard = kEnumerationGuard) {
  if (epsilon < 0.0 || epsilon > 0.5) throw std::invalid_argument("epsilon must be in [0, 0.5]");
  ExactPosterior post;
  detail::enumerate_boards_impl(config, nullptr, guard, [&](Board b) {
    if (!is_consistent(b, partial)) return;
    double w = 1.0;
    for (const QuestionAnswer& qa : log) {
      const bool truth = evaluate(qa.question, b, qa.context);
      w *= truth == qa.answer ? (1.0 - epsilon) : epsilon;
    }
    if (w > 0.0) {
      post.boards.push_back(std::move(b));
      post.probs.push_back(w);
    }
  });
  double total = 0.0;
  for (double w : post.probs) total += w;
  if (total <= 0.0) throw DepletedError("depleted: no enumerated board matches the evidence");
  for (double& w : post.probs) w /= total;
  return post;
}

}  // namespace battleship
