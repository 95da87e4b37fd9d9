#pragma once

#include <cassert>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "battleship/belief.hpp"
#include "battleship/candidates.hpp"

namespace battleship {

enum class DecisionRule : std::int8_t { AlwaysMove, Lookahead, ExternalLm };
enum class QuestionRule : std::int8_t { None, BayesEig, ExternalLm };
enum class MoveRule : std::int8_t { UniformRandom, BayesMap, ExternalLm };

// Captain configuration. The named presets map onto the strategy ladder:
//   random     move-only, uniform over hidden cells
//   greedy     move-only, maximum-a-posteriori hit probability
//   lm         decision/question/move all delegated to a language model
//   bayes-q    lm, with questions selected by argmax expected information gain
//   bayes-m    lm, with moves selected by MAP hit probability
//   bayes-qm   lm decisions, Bayes questions and moves
//   bayes-qmd  Bayes questions/moves plus discounted one-step lookahead decision
struct CaptainPolicy {
  std::string name = "greedy";
  DecisionRule decision_rule = DecisionRule::AlwaysMove;
  QuestionRule question_rule = QuestionRule::None;
  MoveRule move_rule = MoveRule::BayesMap;
  double gamma = 1.0;  // lookahead discount; 1.0 = ask iff strictly better
  int k = 10;          // candidate questions per turn

  static CaptainPolicy preset(std::string_view name) {
    CaptainPolicy p;
    p.name = std::string(name);
    if (name == "random") {
      p.decision_rule = DecisionRule::AlwaysMove;
      p.question_rule = QuestionRule::None;
      p.move_rule = MoveRule::UniformRandom;
    } else if (name == "greedy") {
      p.decision_rule = DecisionRule::AlwaysMove;
      p.question_rule = QuestionRule::None;
      p.move_rule = MoveRule::BayesMap;
    } else if (name == "lm") {
      p.decision_rule = DecisionRule::ExternalLm;
      p.question_rule = QuestionRule::ExternalLm;
      p.move_rule = MoveRule::ExternalLm;
    } else if (name == "bayes-q") {
      p.decision_rule = DecisionRule::ExternalLm;
      p.question_rule = QuestionRule::BayesEig;
      p.move_rule = MoveRule::ExternalLm;
    } else if (name == "bayes-m") {
      p.decision_rule = DecisionRule::ExternalLm;
      p.question_rule = QuestionRule::ExternalLm;
      p.move_rule = MoveRule::BayesMap;
    } else if (name == "bayes-qm") {
      p.decision_rule = DecisionRule::ExternalLm;
      p.question_rule = QuestionRule::BayesEig;
      p.move_rule = MoveRule::BayesMap;
    } else if (name == "bayes-qmd") {
      p.decision_rule = DecisionRule::Lookahead;
      p.question_rule = QuestionRule::BayesEig;
      p.move_rule = MoveRule::BayesMap;
    } else {
      throw std::invalid_argument("unknown policy preset '" + std::string(name) + "'");
    }
    p.validate();
    return p;
  }

  void validate() const {
    if (decision_rule == DecisionRule::AlwaysMove && question_rule != QuestionRule::None)
      throw std::invalid_argument("an always-move policy cannot have a question rule");
    if (k < 1) throw std::invalid_argument("candidate count must be >= 1");
    if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in [0, 1]");
  }

  // No adapter endpoint configured: external-LM slots degrade to their Bayes
  // counterparts so the preset remains runnable (lookahead decision, EIG
  // question selection, MAP moves).
  CaptainPolicy resolved_without_adapter() const {
    CaptainPolicy p = *this;
    if (p.decision_rule == DecisionRule::ExternalLm) p.decision_rule = DecisionRule::Lookahead;
    if (p.question_rule == QuestionRule::ExternalLm) p.question_rule = QuestionRule::BayesEig;
    if (p.move_rule == MoveRule::ExternalLm) p.move_rule = MoveRule::BayesMap;
    return p;
  }

  bool uses_lm() const {
    return decision_rule == DecisionRule::ExternalLm || question_rule == QuestionRule::ExternalLm ||
           move_rule == MoveRule::ExternalLm;
  }
};

struct Budgets {
  int questions_left = 15;
  int moves_left = 40;
};

struct Decision {
  enum class Kind : std::int8_t { Ask, Fire } kind = Kind::Fire;
  std::optional<Question> question;
  std::optional<Coord> target;
  // Diagnostics captured at decision time.
  double eig = 0.0;
  double p_yes = 0.0;
  double p_hit = 0.0;
  double expected_post_hit = 0.0;
  bool all_constant_candidates = false;
  bool question_from_lm = false;
  std::vector<std::string> fallbacks;
};

// Hooks for language-model-backed rules. Each returns nullopt (or throws) on
// failure, in which case the caller degrades to the Bayes counterpart and
// records a fallback.
struct LmHooks {
  std::function<std::optional<bool>()> wants_question;           // decision: true = ask
  std::function<std::optional<Question>()> question;             // single DSL question
  std::function<std::optional<std::vector<Question>>(int)> question_batch;  // k candidates
  std::function<std::optional<Coord>()> move;
};

// argmax-EIG selection with deterministic tie-breaking on the canonical
// serialization.
inline std::pair<Question, double> select_question_bayes(const ParticleBelief& belief,
                                                         std::span<const Question> candidates,
                                                         const PartialBoard& partial) {
  if (candidates.empty()) throw std::invalid_argument("candidate list is empty");
  double best_eig = -1.0;
  std::string best_key;
  const Question* best = nullptr;
  std::vector<double> eigs;
  eigs.reserve(candidates.size());
  for (const Question& q : candidates) {
    const double e = belief.eig(q, partial);
    eigs.push_back(e);
    if (e > best_eig) {
      best_eig = e;
      best = &q;
      best_key = serialize(q);
    } else if (e == best_eig) {
      std::string key = serialize(q);
      if (key < best_key) {
        best = &q;
        best_key = std::move(key);
      }
    }
  }
  for (double e : eigs)
    if (e > best_eig) throw std::logic_error("selected question is not the EIG argmax");
  return {*best, best_eig};
}

// MAP move: hidden cell with maximal hit probability, row-major on ties.
inline Coord select_move_bayes(const ParticleBelief& belief, const PartialBoard& partial) {
  return belief.hit_probability_grid(partial).best(partial).first;
}

// Expected next-turn MAP hit probability after asking q (Bayes-weighted over
// both possible noisy answers). The two branch updates happen on copies.
inline double expected_post_question_hit(const ParticleBelief& belief, const Question& q,
                                         const PartialBoard& partial) {
  const AnswerVector av = answer_vector(q, belief.particles(), partial);
  const double p = belief.yes_probability(av);
  const double pr_yes = answer_yes_probability(p, belief.epsilon());
  double total = 0.0;
  const double pr[2] = {1.0 - pr_yes, pr_yes};
  for (int a = 0; a < 2; ++a) {
    if (pr[a] <= 0.0) continue;  // zero-mass branch (epsilon = 0)
    auto [branch, has_mass] = belief.branch_update(av, a == 1);
    if (!has_mass) continue;
    total += pr[a] * branch.hit_probability_grid(partial).best(partial).second;
  }
  return total;
}

using QuestionSource =
    std::function<CandidateSet(const PartialBoard&, const ParticleBelief&, int, Rng&)>;

inline QuestionSource symbolic_question_source(const BoardConfig& config) {
  return [config](const PartialBoard& partial, const ParticleBelief& belief, int k, Rng& rng) {
    return enumerate_candidates(partial, config, k, belief.particles(), rng);
  };
}

namespace detail {

inline Coord uniform_hidden_cell(const PartialBoard& partial, Rng& rng) {
  std::vector<Coord> hidden;
  for (int r = 0; r < partial.rows(); ++r)
    for (int c = 0; c < partial.cols(); ++c)
      if (partial.is_hidden({r, c})) hidden.push_back({r, c});
  if (hidden.empty()) throw std::invalid_argument("no hidden cells remain");
  return hidden[rng.index(hidden.size())];
}

}  // namespace detail

// One turn of the Captain. Requires moves_left > 0 and at least one hidden
// cell. Deterministic given (policy, belief, partial, budgets, rng state).
inline Decision decide(const CaptainPolicy& policy, const ParticleBelief& belief,
                       const PartialBoard& partial, Budgets budgets,
                       const QuestionSource& question_source, Rng& rng,
                       const LmHooks* lm = nullptr) {
  if (budgets.moves_left <= 0) throw std::invalid_argument("decide called with no moves left");
  Decision d;

  // Resolve the move first; every path can fall back to it.
  auto bayes_move = [&]() {
    auto [coord, p] = belief.hit_probability_grid(partial).best(partial);
    d.p_hit = p;
    return coord;
  };

  switch (policy.move_rule) {
    case MoveRule::UniformRandom: d.target = detail::uniform_hidden_cell(partial, rng); break;
    case MoveRule::BayesMap: d.target = bayes_move(); break;
    case MoveRule::ExternalLm: {
      std::optional<Coord> c;
      if (lm && lm->move) c = lm->move();
      if (c && partial.in_bounds(*c) && partial.is_hidden(*c)) {
        d.target = *c;
      } else {
        d.fallbacks.push_back(c ? "lm move targets a revealed or invalid cell"
                                : "lm move unavailable");
        d.target = bayes_move();
      }
      break;
    }
  }

  if (policy.decision_rule == DecisionRule::AlwaysMove || budgets.questions_left <= 0) return d;

  // Candidate questions for this turn.
  auto gather_candidates = [&]() -> CandidateSet {
    if (policy.question_rule == QuestionRule::ExternalLm && lm && lm->question_batch) {
      if (auto qs = lm->question_batch(policy.k); qs && !qs->empty()) {
        CandidateSet set;
        set.questions = std::move(*qs);
        set.from_lm = true;
        for (const Question& q : set.questions)
          set.vectors.push_back(answer_vector(q, belief.particles(), partial));
        return set;
      }
      d.fallbacks.push_back("lm question batch unavailable");
    }
    return question_source(partial, belief, policy.k, rng);
  };

  switch (policy.decision_rule) {
    case DecisionRule::AlwaysMove: return d;  // unreachable, handled above
    case DecisionRule::ExternalLm: {
      std::optional<bool> ask;
      if (lm && lm->wants_question) ask = lm->wants_question();
      if (!ask) {
        d.fallbacks.push_back("lm decision unavailable");
        return d;  // act
      }
      if (!*ask) return d;
      // LM chose to ask; fetch the question per the question rule.
      if (policy.question_rule == QuestionRule::ExternalLm && lm && lm->question) {
        if (auto q = lm->question()) {
          d.kind = Decision::Kind::Ask;
          d.question = *q;
          d.question_from_lm = true;
          const double p = belief.yes_probability(*q, partial);
          d.p_yes = p;
          d.eig = eig_bsc(p, belief.epsilon());
          return d;
        }
        d.fallbacks.push_back("lm question unavailable");
      }
      CandidateSet set = gather_candidates();
      if (set.questions.empty()) {
        d.fallbacks.push_back("no candidate questions");
        return d;
      }
      auto [q, e] = select_question_bayes(belief, set.questions, partial);
      d.kind = Decision::Kind::Ask;
      d.question = q;
      d.eig = e;
      d.p_yes = belief.yes_probability(q, partial);
      d.all_constant_candidates = set.all_constant;
      d.question_from_lm = set.from_lm;
      return d;
    }
    case DecisionRule::Lookahead: {
      if (policy.move_rule != MoveRule::BayesMap) {
        // The lookahead test compares against the MAP hit probability even
        // when the executed move comes from another rule.
        d.p_hit = belief.hit_probability_grid(partial).best(partial).second;
      }
      CandidateSet set = gather_candidates();
      if (set.questions.empty()) return d;
      auto [q, e] = select_question_bayes(belief, set.questions, partial);
      const double expected = expected_post_question_hit(belief, q, partial);
      d.expected_post_hit = expected;
      if (d.target && policy.gamma * expected > d.p_hit) {
        d.kind = Decision::Kind::Ask;
        d.question = q;
        d.eig = e;
        d.p_yes = belief.yes_probability(q, partial);
        d.all_constant_candidates = set.all_constant;
        d.question_from_lm = set.from_lm;
      d.question_from_lm = set.from_lm;
      }
      return d;
    }
  }
  return d;
}

}  // namespace battleship
