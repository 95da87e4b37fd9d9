#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "battleship/engine.hpp"

namespace battleship {

struct Targeting {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool zero_shots = false;  // precision undefined, reported as 0
};

// Board as binary classification: ship tiles are the positive class.
// precision = hits/shots, recall = hits/total ship cells, f1 their harmonic mean.
inline Targeting targeting_scores(const Trajectory& traj) {
  Targeting t;
  int shots = 0, hits = 0;
  for (const Event& e : traj.events) {
    if (e.type != Event::Type::Shot) continue;
    ++shots;
    hits += e.hit;
  }
  const int ship_cells = traj.config.total_ship_cells();
  if (shots == 0) {
    t.zero_shots = true;
    return t;
  }
  t.precision = static_cast<double>(hits) / shots;
  t.recall = ship_cells > 0 ? static_cast<double>(hits) / ship_cells : 0.0;
  t.f1 = t.precision + t.recall > 0.0
             ? 2.0 * t.precision * t.recall / (t.precision + t.recall)
             : 0.0;
  return t;
}

struct EigStats {
  double mean_eig = 0.0;
  double redundant_fraction = 0.0;
};

// A question is redundant when its EIG at ask time is numerically zero.
inline constexpr double kRedundantEigThreshold = 1e-9;

// Null when the game asked no questions; such games are excluded from
// aggregate denominators.
inline std::optional<EigStats> eig_stats(const Trajectory& traj) {
  int n = 0, redundant = 0;
  double total = 0.0;
  for (const Event& e : traj.events) {
    if (e.type != Event::Type::Question) continue;
    ++n;
    total += e.eig;
    redundant += e.eig < kRedundantEigThreshold;
  }
  if (n == 0) return std::nullopt;
  return EigStats{total / n, static_cast<double>(redundant) / n};
}

struct GameMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int moves_used = 0;
  int questions_used = 0;
  std::optional<double> mean_eig;
  std::optional<double> redundant_fraction;
  Outcome outcome = Outcome::Running;
  bool zero_shots = false;
  // Whose belief scored the questions: the acting captain's, or the shadow
  // belief maintained passively for LM-selected questions.
  std::string eig_source = "captain_belief";
};

inline GameMetrics compute_game_metrics(const Trajectory& traj) {
  GameMetrics m;
  const Targeting t = targeting_scores(traj);
  m.precision = t.precision;
  m.recall = t.recall;
  m.f1 = t.f1;
  m.zero_shots = t.zero_shots;
  m.moves_used = traj.shots_fired();
  m.questions_used = traj.questions_asked();
  if (auto es = eig_stats(traj)) {
    m.mean_eig = es->mean_eig;
    m.redundant_fraction = es->redundant_fraction;
  }
  m.outcome = traj.outcome;
  if (traj.options.is_object()) m.eig_source = traj.options.value("eig_source", m.eig_source);
  return m;
}

inline json metrics_to_json(const GameMetrics& m) {
  json j{{"precision", m.precision},
         {"recall", m.recall},
         {"f1", m.f1},
         {"moves_used", m.moves_used},
         {"questions_used", m.questions_used},
         {"outcome", std::string(outcome_name(m.outcome))},
         {"zero_shots", m.zero_shots}};
  j["mean_eig"] = m.mean_eig ? json(*m.mean_eig) : json(nullptr);
  j["redundant_fraction"] = m.redundant_fraction ? json(*m.redundant_fraction) : json(nullptr);
  if (m.mean_eig) j["eig_source"] = m.eig_source;
  return j;
}

// Computes and attaches the final metrics block.
inline GameMetrics finalize_metrics(Trajectory& traj) {
  const GameMetrics m = compute_game_metrics(traj);
  traj.metrics = metrics_to_json(m);
  return m;
}

// ---------------------------------------------------------------------------
// Pairwise win rate

namespace detail {

// 1.0 if a beats b, 0.0 if b beats a, 0.5 on an exact tie. Winner sinks all
// ships in fewer moves; if only one sank all, it wins; otherwise F1 decides.
inline double pair_credit(const GameMetrics& a, const GameMetrics& b) {
  const bool a_won = a.outcome == Outcome::Win;
  const bool b_won = b.outcome == Outcome::Win;
  if (a_won && b_won) {
    if (a.moves_used != b.moves_used) return a.moves_used < b.moves_used ? 1.0 : 0.0;
  } else if (a_won != b_won) {
    return a_won ? 1.0 : 0.0;
  }
  if (a.f1 != b.f1) return a.f1 > b.f1 ? 1.0 : 0.0;
  return 0.5;
}

}  // namespace detail

// Board-matched mean win credit of A over B: pairs within each shared board
// id are averaged first, then averaged across boards.
inline double win_rate(std::span<const Trajectory> trajs_a, std::span<const Trajectory> trajs_b) {
  std::map<std::string, std::vector<GameMetrics>> by_board_a, by_board_b;
  for (const Trajectory& t : trajs_a) by_board_a[t.board_id].push_back(compute_game_metrics(t));
  for (const Trajectory& t : trajs_b) by_board_b[t.board_id].push_back(compute_game_metrics(t));

  double board_total = 0.0;
  int boards = 0;
  for (const auto& [board_id, list_a] : by_board_a) {
    const auto it = by_board_b.find(board_id);
    if (it == by_board_b.end()) continue;
    double credit = 0.0;
    int pairs = 0;
    for (const GameMetrics& a : list_a)
      for (const GameMetrics& b : it->second) {
        credit += detail::pair_credit(a, b);
        ++pairs;
      }
    board_total += credit / pairs;
    ++boards;
  }
  if (boards == 0) throw std::invalid_argument("win_rate: no overlapping board ids");
  return board_total / boards;
}

// ---------------------------------------------------------------------------
// Aggregate summary across a policy's games (one row of the results table).

struct PolicySummary {
  std::string policy;
  int games = 0;
  int wins = 0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double moves = 0.0;
  double questions = 0.0;
  std::optional<double> mean_eig;             // over games that asked questions
  std::optional<double> redundant_fraction;   // over games that asked questions

  static PolicySummary from(const std::string& policy, std::span<const Trajectory> trajs) {
    PolicySummary s;
    s.policy = policy;
    double eig_total = 0.0, redundant_total = 0.0;
    int eig_games = 0;
    for (const Trajectory& t : trajs) {
      const GameMetrics m = compute_game_metrics(t);
      ++s.games;
      s.wins += m.outcome == Outcome::Win;
      s.f1 += m.f1;
      s.precision += m.precision;
      s.recall += m.recall;
      s.moves += m.moves_used;
      s.questions += m.questions_used;
      if (m.mean_eig) {
        eig_total += *m.mean_eig;
        redundant_total += *m.redundant_fraction;
        ++eig_games;
      }
    }
    if (s.games > 0) {
      s.f1 /= s.games;
      s.precision /= s.games;
      s.recall /= s.games;
      s.moves /= s.games;
      s.questions /= s.games;
    }
    if (eig_games > 0) {
      s.mean_eig = eig_total / eig_games;
      s.redundant_fraction = redundant_total / eig_games;
    }
    return s;
  }

  json to_json() const {
    json j{{"policy", policy}, {"games", games},   {"wins", wins},
           {"f1", f1},         {"precision", precision}, {"recall", recall},
           {"moves", moves},   {"questions", questions}};
    j["mean_eig"] = mean_eig ? json(*mean_eig) : json(nullptr);
    j["redundant_fraction"] = redundant_fraction ? json(*redundant_fraction) : json(nullptr);
    return j;
  }
};

inline std::string summaries_to_csv(std::span<const PolicySummary> rows) {
  std::string out =
      "policy,games,wins,f1,precision,recall,moves,questions,mean_eig,redundant_fraction\n";
  for (const PolicySummary& s : rows) {
    out += s.policy + ',' + std::to_string(s.games) + ',' + std::to_string(s.wins);
    char buf[160];
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f,%.3f,%.3f", s.f1, s.precision, s.recall,
                  s.moves, s.questions);
    out += buf;
    if (s.mean_eig)
      std::snprintf(buf, sizeof(buf), ",%.6f,%.6f\n", *s.mean_eig, *s.redundant_fraction);
    else
      std::snprintf(buf, sizeof(buf), ",,\n");
    out += buf;
  }
  return out;
}

inline std::string win_matrix_to_csv(std::span<const std::string> policies,
                                     const std::map<std::pair<std::string, std::string>, double>&
                                         matrix) {
  std::string out = "policy";
  for (const std::string& p : policies) out += ',' + p;
  out += '\n';
  for (const std::string& row : policies) {
    out += row;
    for (const std::string& col : policies) {
      char buf[32];
      if (row == col)
        std::snprintf(buf, sizeof(buf), ",");
      else
        std::snprintf(buf, sizeof(buf), ",%.4f", matrix.at({row, col}));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace battleship
