#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "battleship/board.hpp"
#include "battleship/question.hpp"
#include "battleship/rng.hpp"

namespace testsup {

// Chi-square critical value via the Wilson-Hilferty approximation; accurate to
// well under a percent for the degrees of freedom used here.
inline double chi2_critical(int df, double alpha) {
  // upper-tail z for the given alpha
  const double z = alpha <= 0.01 ? 2.3263478740 : (alpha <= 0.05 ? 1.6448536270 : 1.2815515655);
  const double t = 2.0 / (9.0 * df);
  const double v = 1.0 - t + z * std::sqrt(t);
  return df * v * v * v;
}

struct Chi2Result {
  double statistic = 0.0;
  int df = 0;
  double critical = 0.0;
  bool pass = false;
};

// Goodness of fit of observed counts against uniform expectation.
inline Chi2Result chi2_uniform(const std::vector<long>& counts, long total, double alpha) {
  Chi2Result res;
  const double expected = static_cast<double>(total) / counts.size();
  for (long c : counts) {
    const double d = c - expected;
    res.statistic += d * d / expected;
  }
  res.df = static_cast<int>(counts.size()) - 1;
  res.critical = chi2_critical(res.df, alpha);
  res.pass = res.statistic < res.critical;
  return res;
}

// Wald-Wolfowitz runs test statistic for a binary sequence; |z| below the
// normal critical value means no evidence against independence.
inline double runs_test_z(const std::vector<bool>& seq) {
  long n1 = 0, n0 = 0;
  for (bool b : seq) (b ? n1 : n0)++;
  if (n1 == 0 || n0 == 0) return 0.0;
  long runs = 1;
  for (std::size_t i = 1; i < seq.size(); ++i)
    if (seq[i] != seq[i - 1]) ++runs;
  const double n = static_cast<double>(n1 + n0);
  const double mu = 2.0 * n1 * n0 / n + 1.0;
  const double var = (mu - 1.0) * (mu - 2.0) / (n - 1.0);
  return (runs - mu) / std::sqrt(var);
}

// Exact binomial tail P(X >= k) for small n.
inline double binomial_upper_tail(int n, double p, int k) {
  double tail = 0.0;
  for (int i = k; i <= n; ++i) {
    double log_c = 0.0;
    for (int j = 0; j < i; ++j) log_c += std::log((n - j) / static_cast<double>(i - j));
    tail += std::exp(log_c + i * std::log(p) + (n - i) * std::log1p(-p));
  }
  return tail;
}

// Serialized-board keyed index over an enumerated feasible set.
inline std::map<std::string, std::size_t> board_index(const std::vector<battleship::Board>& boards) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < boards.size(); ++i) idx[battleship::serialize_board(boards[i])] = i;
  return idx;
}

// Small 4x4 config with two ships; the whole feasible set enumerates quickly.
inline battleship::BoardConfig tiny_config() {
  battleship::BoardConfig cfg;
  cfg.rows = 4;
  cfg.cols = 4;
  cfg.ships = {{battleship::ShipColor::Red, 2}, {battleship::ShipColor::Green, 3}};
  cfg.question_budget = 15;
  cfg.move_budget = 16;
  return cfg;
}

// Random question generator for property tests: depth-bounded over all atom
// kinds, always in-bounds for the given config.
inline battleship::Question random_question(const battleship::BoardConfig& cfg, battleship::Rng& rng,
                                            int depth = 2) {
  using battleship::Cmp;
  using battleship::Coord;
  using battleship::Question;
  using battleship::Region;
  auto random_coord = [&] {
    return Coord{static_cast<int>(rng.below(cfg.rows)), static_cast<int>(rng.below(cfg.cols))};
  };
  auto random_color = [&] { return cfg.ships[rng.index(cfg.ships.size())].color; };
  auto random_region = [&]() -> Region {
    switch (rng.below(4)) {
      case 0: {
        Coord a = random_coord(), b = random_coord();
        return Region::rect(a, b);
      }
      case 1: return Region::row(static_cast<int>(rng.below(cfg.rows)));
      case 2: return Region::col(static_cast<int>(rng.below(cfg.cols)));
      default: {
        std::vector<Coord> tiles;
        const int n = 1 + static_cast<int>(rng.below(4));
        for (int i = 0; i < n; ++i) tiles.push_back(random_coord());
        return Region::cells(std::move(tiles));
      }
    }
  };
  auto random_cmp = [&] { return static_cast<Cmp>(rng.below(5)); };

  if (depth > 0 && rng.bernoulli(0.4)) {
    switch (rng.below(3)) {
      case 0: return Question::negation(random_question(cfg, rng, depth - 1));
      case 1:
        return Question::conjunction(
            {random_question(cfg, rng, depth - 1), random_question(cfg, rng, depth - 1)});
      default:
        return Question::disjunction(
            {random_question(cfg, rng, depth - 1), random_question(cfg, rng, depth - 1)});
    }
  }
  switch (rng.below(9)) {
    case 0: return Question::tile_is_ship(random_coord());
    case 1: return Question::tile_is_color(random_coord(), random_color());
    case 2: return Question::any_ship(random_region());
    case 3:
      return Question::count_ship(random_region(), random_cmp(), static_cast<int>(rng.below(6)));
    case 4: return Question::ship_len(random_color(), random_cmp(), 2 + static_cast<int>(rng.below(4)));
    case 5: return Question::ship_horizontal(random_color());
    case 6:
      return Question::ships_touching(random_color(), random_color());
    case 7: return Question::any_unrevealed_ship(random_region());
    default: return Question::ship_sunk(random_color());
  }
}

// Reveal `count` random distinct cells of `truth` into a fresh partial board.
inline battleship::PartialBoard random_partial(const battleship::Board& truth, int count,
                                               battleship::Rng& rng) {
  auto partial = battleship::PartialBoard::all_hidden(truth.rows(), truth.cols());
  std::vector<battleship::Coord> cells;
  for (int r = 0; r < truth.rows(); ++r)
    for (int c = 0; c < truth.cols(); ++c) cells.push_back({r, c});
  rng.shuffle(cells);
  for (int i = 0; i < count && i < static_cast<int>(cells.size()); ++i)
    partial = partial.with_revealed(cells[i], truth.at(cells[i]));
  return partial;
}

}  // namespace testsup
