#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "battleship/board.hpp"
#include "battleship/question.hpp"
#include "battleship/rng.hpp"

namespace battleship {

// Observation model. Oracle answers f_q exactly; Noisy flips the oracle
// answer with probability epsilon independently per call (a binary symmetric
// channel); External delegates to an adapter and can fall back to Oracle.
class SpotterChannel {
 public:
  enum class Kind { Oracle, Noisy, External };
  using ExternalFn =
      std::function<bool(const Question&, const Board&, const PartialBoard&)>;

  static SpotterChannel oracle() { return SpotterChannel(Kind::Oracle, 0.0, Rng(0)); }

  static SpotterChannel noisy(double epsilon, Rng rng) {
    if (epsilon < 0.0 || epsilon > 0.5) throw std::invalid_argument("epsilon must be in [0, 0.5]");
    return SpotterChannel(Kind::Noisy, epsilon, rng);
  }

  static SpotterChannel external(ExternalFn fn, bool fallback_to_oracle) {
    SpotterChannel s(Kind::External, 0.0, Rng(0));
    s.external_ = std::move(fn);
    s.fallback_ = fallback_to_oracle;
    return s;
  }

  Kind kind() const { return kind_; }
  double epsilon() const { return epsilon_; }

  const char* kind_name() const {
    switch (kind_) {
      case Kind::Oracle: return "oracle";
      case Kind::Noisy: return "noisy";
      case Kind::External: return "external";
    }
    return "?";
  }

  // True iff the last answer came from the oracle fallback path.
  bool last_was_fallback() const { return last_was_fallback_; }

  bool answer(const Question& q, const Board& board, const PartialBoard& partial) {
    last_was_fallback_ = false;
    switch (kind_) {
      case Kind::Oracle: return evaluate(q, board, partial);
      case Kind::Noisy: {
        const bool truth = evaluate(q, board, partial);
        return rng_.bernoulli(epsilon_) ? !truth : truth;
      }
      case Kind::External:
        try {
          return external_(q, board, partial);
        } catch (const std::exception& e) {
          if (!fallback_) throw;
          last_was_fallback_ = true;
          return evaluate(q, board, partial);
        }
    }
    throw std::logic_error("unreachable spotter kind");
  }

 private:
  SpotterChannel(Kind kind, double epsilon, Rng rng) : kind_(kind), epsilon_(epsilon), rng_(rng) {}

  Kind kind_;
  double epsilon_;
  Rng rng_;
  ExternalFn external_;
  bool fallback_ = false;
  bool last_was_fallback_ = false;
};

}  // namespace battleship
