#pragma once

#include <span>
#include <vector>

#include "battleship/board.hpp"
#include "battleship/question.hpp"
#include "battleship/rng.hpp"

namespace battleship {

// Output of the symbolic candidate generator. Candidates are semantically
// deduplicated: two questions with identical answer vectors over the current
// particles are the same experiment. When every template in the pool is
// constant over the particles (answer already determined), the constants are
// returned with all_constant set so callers can treat them as EIG-null
// instead of searching forever.
struct CandidateSet {
  std::vector<Question> questions;
  std::vector<AnswerVector> vectors;
  bool all_constant = false;
  bool from_lm = false;  // pool supplied by a language model rather than templates
};

namespace detail {

inline std::vector<Question> template_atoms(const BoardConfig& config) {
  std::vector<Question> atoms;
  for (int r = 0; r < config.rows; ++r) {
    atoms.push_back(Question::any_ship(Region::row(r)));
    atoms.push_back(Question::any_unrevealed_ship(Region::row(r)));
  }
  for (int c = 0; c < config.cols; ++c) {
    atoms.push_back(Question::any_ship(Region::col(c)));
    atoms.push_back(Question::any_unrevealed_ship(Region::col(c)));
  }
  const int rm = config.rows / 2, cm = config.cols / 2;
  if (rm > 0 && cm > 0) {
    const Region quads[4] = {
        Region::rect({0, 0}, {rm - 1, cm - 1}),
        Region::rect({0, cm}, {rm - 1, config.cols - 1}),
        Region::rect({rm, 0}, {config.rows - 1, cm - 1}),
        Region::rect({rm, cm}, {config.rows - 1, config.cols - 1}),
    };
    for (const Region& q : quads) {
      atoms.push_back(Question::any_ship(q));
      atoms.push_back(Question::any_unrevealed_ship(q));
      atoms.push_back(Question::count_ship(q, Cmp::Ge, 2));
    }
  }
  for (const auto& ship : config.ships) {
    atoms.push_back(Question::ship_horizontal(ship.color));
    atoms.push_back(Question::ship_sunk(ship.color));
    for (int len = 2; len <= 5; ++len)
      atoms.push_back(Question::ship_len(ship.color, Cmp::Eq, len));
  }
  for (std::size_t i = 0; i < config.ships.size(); ++i)
    for (std::size_t j = i + 1; j < config.ships.size(); ++j)
      atoms.push_back(Question::ships_touching(config.ships[i].color, config.ships[j].color));
  return atoms;
}

// The template pool is atoms, their negations, and and/or over every atom
// pair (depth <= 2). Entries are materialized lazily from a flat index so a
// capped scan never has to build the whole combination space.
class TemplatePool {
 public:
  explicit TemplatePool(const BoardConfig& config) : atoms_(template_atoms(config)) {}

  std::size_t size() const {
    const std::size_t a = atoms_.size();
    return 2 * a + 2 * (a * (a - 1) / 2);
  }

  Question at(std::size_t idx) const {
    const std::size_t a = atoms_.size();
    if (idx < a) return atoms_[idx];
    idx -= a;
    if (idx < a) return Question::negation(atoms_[idx]);
    idx -= a;
    const bool disjunctive = idx % 2 == 1;
    std::size_t pair = idx / 2;
    // pair -> (i, j), i < j, lexicographic
    std::size_t i = 0;
    std::size_t remaining = a - 1;
    while (pair >= remaining) {
      pair -= remaining;
      ++i;
      --remaining;
    }
    const std::size_t j = i + 1 + pair;
    return disjunctive ? Question::disjunction({atoms_[i], atoms_[j]})
                       : Question::conjunction({atoms_[i], atoms_[j]});
  }

 private:
  std::vector<Question> atoms_;
};

}  // namespace detail

// Caps how many shuffled templates are answer-vector-scanned per call; keeps
// degenerate endgame states (everything constant) from scanning the whole
// combination pool.
inline constexpr std::size_t kCandidateScanCap = 384;

inline CandidateSet enumerate_candidates(const PartialBoard& partial, const BoardConfig& config,
                                         int k, std::span<const Board> particles, Rng& rng) {
  if (k < 1) throw std::invalid_argument("candidate count must be >= 1");
  CandidateSet out;
  if (particles.empty()) return out;

  // With a fully collapsed particle set every question is constant; skip the
  // scan and return a token pool of constants.
  bool collapsed = true;
  for (std::size_t j = 1; j < particles.size() && collapsed; ++j)
    collapsed = particles[j] == particles[0];

  detail::TemplatePool pool(config);
  std::vector<std::uint32_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  rng.shuffle(order);

  std::vector<Question> constants;
  std::vector<AnswerVector> constant_vectors;
  const std::size_t scan_cap = collapsed ? static_cast<std::size_t>(k) : kCandidateScanCap;
  std::size_t scanned = 0;
  for (std::uint32_t idx : order) {
    if (scanned >= scan_cap || static_cast<int>(out.questions.size()) >= k) break;
    ++scanned;
    Question q = pool.at(idx);
    AnswerVector av = answer_vector(q, particles, partial);
    if (av.constant()) {
      // Keep one representative constant per truth value as a fallback.
      bool dup = false;
      for (const AnswerVector& seen : constant_vectors)
        if (seen == av) {
          dup = true;
          break;
        }
      if (!dup && static_cast<int>(constants.size()) < k) {
        constants.push_back(std::move(q));
        constant_vectors.push_back(std::move(av));
      }
      continue;
    }
    bool duplicate = false;
    for (const AnswerVector& seen : out.vectors)
      if (seen == av) {
        duplicate = true;
        break;
      }
    if (duplicate) continue;
    out.questions.push_back(std::move(q));
    out.vectors.push_back(std::move(av));
  }

  if (out.questions.empty() && !constants.empty()) {
    out.questions = std::move(constants);
    out.vectors = std::move(constant_vectors);
    out.all_constant = true;
  }
  return out;
}

}  // namespace battleship
