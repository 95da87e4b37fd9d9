#pragma once

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "battleship/belief.hpp"
#include "battleship/board.hpp"
#include "battleship/spotter.hpp"
#include "battleship/strategy.hpp"

namespace battleship {

using json = nlohmann::json;

enum class Outcome : std::int8_t { Running, Win, Loss, Error };

inline std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Running: return "running";
    case Outcome::Win: return "win";
    case Outcome::Loss: return "loss";
    case Outcome::Error: return "error";
  }
  return "?";
}

inline Outcome outcome_from_name(std::string_view s) {
  if (s == "running") return Outcome::Running;
  if (s == "win") return Outcome::Win;
  if (s == "loss") return Outcome::Loss;
  if (s == "error") return Outcome::Error;
  throw std::invalid_argument("unknown outcome '" + std::string(s) + "'");
}

struct Seeds {
  std::uint64_t board = 0;
  std::uint64_t captain = 0;
  std::uint64_t spotter = 0;
};

struct GameState {
  Board truth;
  PartialBoard partial;
  Budgets budgets;
  Outcome outcome = Outcome::Running;
};

struct Event {
  enum class Type : std::int8_t { Question, Answer, Shot, Fallback, Snapshot } type;

  // Question
  std::string question_text;
  double eig = 0.0;
  double p_yes = 0.0;
  std::string question_source;  // "bayes" or "lm"
  // Answer
  bool answer = false;
  std::string channel;
  bool answer_fallback = false;
  // Shot
  Coord coord{};
  CellValue cell = kWater;
  bool hit = false;
  std::optional<ShipColor> sunk;
  // Fallback
  std::string reason;
  // Snapshot
  std::vector<double> hit_grid;
  std::vector<std::string> top_particles;  // serialized boards, by weight

  json to_json() const {
    json j;
    switch (type) {
      case Type::Question:
        j["type"] = "question";
        j["text"] = question_text;
        j["eig"] = eig;
        j["p_yes"] = p_yes;
        j["source"] = question_source;
        break;
      case Type::Answer:
        j["type"] = "answer";
        j["value"] = answer;
        j["channel"] = channel;
        if (answer_fallback) j["fallback"] = true;
        break;
      case Type::Shot:
        j["type"] = "shot";
        j["coord"] = coord.to_string();
        j["cell"] = static_cast<int>(cell);
        j["hit"] = hit;
        j["sunk"] = sunk ? json(std::string(color_name(*sunk))) : json(nullptr);
        break;
      case Type::Fallback:
        j["type"] = "fallback";
        j["reason"] = reason;
        break;
      case Type::Snapshot:
        j["type"] = "snapshot";
        j["hit_grid"] = hit_grid;
        j["top_particles"] = top_particles;
        break;
    }
    return j;
  }

  static Event from_json(const json& j, int rows, int cols) {
    Event e{};
    const std::string type = j.at("type");
    if (type == "question") {
      e.type = Type::Question;
      e.question_text = j.at("text");
      e.eig = j.at("eig");
      e.p_yes = j.at("p_yes");
      e.question_source = j.value("source", "bayes");
    } else if (type == "answer") {
      e.type = Type::Answer;
      e.answer = j.at("value");
      e.channel = j.value("channel", "oracle");
      e.answer_fallback = j.value("fallback", false);
    } else if (type == "shot") {
      e.type = Type::Shot;
      auto c = parse_coord(j.at("coord").get<std::string>(), rows, cols);
      if (!c) throw std::invalid_argument("bad coordinate in trajectory");
      e.coord = *c;
      e.cell = static_cast<CellValue>(j.at("cell").get<int>());
      e.hit = j.at("hit");
      if (!j.at("sunk").is_null()) {
        auto color = color_from_name(j.at("sunk").get<std::string>());
        if (!color) throw std::invalid_argument("bad color in trajectory");
        e.sunk = *color;
      }
    } else if (type == "fallback") {
      e.type = Type::Fallback;
      e.reason = j.at("reason");
    } else if (type == "snapshot") {
      e.type = Type::Snapshot;
      e.hit_grid = j.at("hit_grid").get<std::vector<double>>();
      e.top_particles = j.value("top_particles", std::vector<std::string>{});
    } else {
      throw std::invalid_argument("unknown event type '" + type + "'");
    }
    return e;
  }
};

inline json config_to_json(const BoardConfig& cfg) {
  json ships = json::array();
  for (const auto& s : cfg.ships)
    ships.push_back({{"color", std::string(color_name(s.color))}, {"length", s.length}});
  return json{{"rows", cfg.rows},
              {"cols", cfg.cols},
              {"ships", ships},
              {"allow_touching", cfg.allow_touching},
              {"question_budget", cfg.question_budget},
              {"move_budget", cfg.move_budget}};
}

inline BoardConfig config_from_json(const json& j) {
  BoardConfig cfg;
  cfg.rows = j.at("rows");
  cfg.cols = j.at("cols");
  cfg.ships.clear();
  for (const auto& s : j.at("ships")) {
    auto color = color_from_name(s.at("color").get<std::string>());
    if (!color) throw std::invalid_argument("bad ship color in config");
    cfg.ships.push_back({*color, s.at("length").get<int>()});
  }
  cfg.allow_touching = j.at("allow_touching");
  cfg.question_budget = j.at("question_budget");
  cfg.move_budget = j.at("move_budget");
  cfg.validate();
  return cfg;
}

// Ordered event log of one game plus everything needed to reproduce it.
// Serialized as JSONL: a header line, one event per line, and a final
// metrics line when metrics have been attached.
struct Trajectory {
  int version = 1;
  std::string environment = "battleship";
  std::string board_id;
  std::string policy_name;
  json policy_config;  // gamma, k, rule names
  BoardConfig config;
  Seeds seeds;
  json options;      // particles, epsilons, spotter kind, snapshots
  json run_config;   // full CLI run configuration, when produced by the CLI
  std::string truth_text;
  std::vector<Event> events;
  Outcome outcome = Outcome::Running;
  json metrics;  // filled by the metrics module; null until then

  int questions_asked() const {
    int n = 0;
    for (const Event& e : events) n += e.type == Event::Type::Question;
    return n;
  }
  int shots_fired() const {
    int n = 0;
    for (const Event& e : events) n += e.type == Event::Type::Shot;
    return n;
  }

  std::string to_jsonl() const {
    json header{{"v", version},
                {"type", "header"},
                {"environment", environment},
                {"board_id", board_id},
                {"policy", policy_name},
                {"policy_config", policy_config},
                {"config", config_to_json(config)},
                {"seeds",
                 {{"board", seeds.board}, {"captain", seeds.captain}, {"spotter", seeds.spotter}}},
                {"options", options},
                {"board", truth_text},
                {"outcome", std::string(outcome_name(outcome))}};
    if (!run_config.is_null()) header["run_config"] = run_config;
    std::string out = header.dump();
    out += '\n';
    for (const Event& e : events) {
      out += e.to_json().dump();
      out += '\n';
    }
    if (!metrics.is_null()) {
      json m = metrics;
      m["type"] = "metrics";
      out += m.dump();
      out += '\n';
    }
    return out;
  }

  static Trajectory from_jsonl(const std::string& text) {
    Trajectory t;
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      const std::string type = j.value("type", "");
      if (type == "header") {
        t.version = j.at("v");
        t.environment = j.at("environment");
        t.board_id = j.at("board_id");
        t.policy_name = j.at("policy");
        t.policy_config = j.value("policy_config", json());
        t.config = config_from_json(j.at("config"));
        t.seeds.board = j.at("seeds").at("board");
        t.seeds.captain = j.at("seeds").at("captain");
        t.seeds.spotter = j.at("seeds").at("spotter");
        t.options = j.value("options", json());
        t.run_config = j.value("run_config", json());
        t.truth_text = j.at("board");
        t.outcome = outcome_from_name(j.at("outcome").get<std::string>());
        have_header = true;
      } else if (type == "metrics") {
        t.metrics = j;
      } else {
        if (!have_header) throw std::invalid_argument("trajectory event before header");
        t.events.push_back(Event::from_json(j, t.config.rows, t.config.cols));
      }
    }
    if (!have_header) throw std::invalid_argument("trajectory has no header line");
    return t;
  }
};

// ---------------------------------------------------------------------------
// Game stepping

struct StepResult {
  GameState state;
  std::vector<Event> events;
};

// Applies one decision. Ask consumes a question (never a move); Fire consumes
// a move, reveals the tile and settles Win/Loss.
inline StepResult step(const GameState& state, const Decision& decision, SpotterChannel& spotter) {
  if (state.outcome != Outcome::Running) throw std::logic_error("step on a finished game");
  StepResult res{state, {}};
  if (decision.kind == Decision::Kind::Ask) {
    if (state.budgets.questions_left <= 0)
      throw std::logic_error("ask with no questions left");
    if (!decision.question) throw std::logic_error("ask decision without a question");
    res.state.budgets.questions_left--;
    Event qe{};
    qe.type = Event::Type::Question;
    qe.question_text = serialize(*decision.question);
    qe.eig = decision.eig;
    qe.p_yes = decision.p_yes;
    qe.question_source = decision.question_from_lm ? "lm" : "bayes";
    const bool answer = spotter.answer(*decision.question, state.truth, state.partial);
    Event ae{};
    ae.type = Event::Type::Answer;
    ae.answer = answer;
    ae.channel = spotter.kind_name();
    ae.answer_fallback = spotter.last_was_fallback();
    res.events.push_back(std::move(qe));
    res.events.push_back(std::move(ae));
    return res;
  }
  // Fire
  if (!decision.target) throw std::logic_error("fire decision without a target");
  const Coord target = *decision.target;
  if (!state.partial.in_bounds(target)) throw std::invalid_argument("fire target out of bounds");
  if (!state.partial.is_hidden(target)) throw std::logic_error("fire at an already revealed cell");
  if (state.budgets.moves_left <= 0) throw std::logic_error("fire with no moves left");
  res.state.budgets.moves_left--;
  auto r = reveal(state.truth, state.partial, target);
  res.state.partial = r.partial;
  Event se{};
  se.type = Event::Type::Shot;
  se.coord = target;
  se.cell = state.truth.at(target);
  se.hit = r.hit;
  se.sunk = r.sunk;
  res.events.push_back(std::move(se));
  if (all_ships_revealed(state.truth, res.state.partial))
    res.state.outcome = Outcome::Win;
  else if (res.state.budgets.moves_left == 0)
    res.state.outcome = Outcome::Loss;
  return res;
}

// View handed to an LM captain driver each turn.
struct GameView {
  const BoardConfig& config;
  const PartialBoard& partial;
  Budgets budgets;
  const Board& truth;  // for sunk-status rendering only; never sent as a grid to the captain
};

struct RunOptions {
  int n_particles = 2000;
  double epsilon_belief = 0.1;
  bool snapshots = false;
  std::string board_id;
  json run_config;  // embedded verbatim in the header
  // Provides per-turn LM hooks; null means no adapter is configured and
  // external-LM rules resolve to their Bayes counterparts.
  std::function<LmHooks(const GameView&)> lm_provider;
};

// Full game loop: decide -> step -> synchronize belief, until Win/Loss.
// Deterministic given seeds. Questions are scored (EIG, p_yes) at ask time
// against the acting captain's belief; for LM-selected questions that belief
// is a passively maintained shadow, flagged in the trajectory options.
inline Trajectory run_game(const BoardConfig& config, const Board& truth,
                           const CaptainPolicy& policy, SpotterChannel spotter, Seeds seeds,
                           const RunOptions& options = {}) {
  config.validate();
  if (!board_valid(truth, config)) throw std::invalid_argument("truth board violates the config");

  const CaptainPolicy resolved =
      options.lm_provider ? policy : policy.resolved_without_adapter();
  resolved.validate();

  Trajectory traj;
  traj.board_id = options.board_id.empty() ? "seed:" + std::to_string(seeds.board)
                                           : options.board_id;
  traj.policy_name = policy.name;
  traj.policy_config = json{{"gamma", resolved.gamma}, {"k", resolved.k}};
  traj.config = config;
  traj.seeds = seeds;
  traj.truth_text = serialize_board(truth);
  traj.run_config = options.run_config;
  traj.options = json{{"particles", options.n_particles},
                      {"epsilon_belief", options.epsilon_belief},
                      {"spotter", spotter.kind_name()},
                      {"epsilon_channel", spotter.epsilon()},
                      {"snapshots", options.snapshots},
                      {"eig_source", resolved.question_rule == QuestionRule::ExternalLm
                                         ? "shadow_belief"
                                         : "captain_belief"}};

  Rng captain_rng(seeds.captain);
  GameState state{truth, PartialBoard::all_hidden(config.rows, config.cols),
                  {config.question_budget, config.move_budget}, Outcome::Running};

  try {
    ParticleBelief belief = ParticleBelief::init(config, state.partial, options.n_particles,
                                                 options.epsilon_belief, captain_rng);
    const QuestionSource source = symbolic_question_source(config);

    while (state.outcome == Outcome::Running) {
      LmHooks hooks;
      const bool use_lm = static_cast<bool>(options.lm_provider);
      if (use_lm) hooks = options.lm_provider(GameView{config, state.partial, state.budgets, truth});

      Decision decision = decide(resolved, belief, state.partial, state.budgets, source,
                                 captain_rng, use_lm ? &hooks : nullptr);
      for (const std::string& reason : decision.fallbacks) {
        Event fe{};
        fe.type = Event::Type::Fallback;
        fe.reason = reason;
        traj.events.push_back(std::move(fe));
      }

      const PartialBoard before = state.partial;
      StepResult sr = step(state, decision, spotter);
      state = sr.state;
      const bool answer =
          decision.kind == Decision::Kind::Ask ? sr.events.back().answer : false;
      for (Event& e : sr.events) traj.events.push_back(std::move(e));

      if (decision.kind == Decision::Kind::Ask) {
        belief = belief.update_answer(*decision.question, answer, before, captain_rng);
      } else {
        belief = belief.update_reveal(*decision.target, state.truth.at(*decision.target),
                                      state.partial, captain_rng);
      }

      if (options.snapshots) {
        Event snap{};
        snap.type = Event::Type::Snapshot;
        snap.hit_grid = belief.hit_probability_grid(state.partial).p;
        for (const auto& [board, weight] : belief.top_particles(3))
          snap.top_particles.push_back(serialize_board(board));
        traj.events.push_back(std::move(snap));
      }
    }
    traj.outcome = state.outcome;
  } catch (const DepletedError& e) {
    Event fe{};
    fe.type = Event::Type::Fallback;
    fe.reason = std::string("aborted: ") + e.what();
    traj.events.push_back(std::move(fe));
    traj.outcome = Outcome::Error;
  }
  return traj;
}

// Convenience: sample the truth board from seeds.board.
inline Trajectory run_game(const BoardConfig& config, const CaptainPolicy& policy,
                           SpotterChannel spotter, Seeds seeds, const RunOptions& options = {}) {
  Rng board_rng(seeds.board);
  return run_game(config, sample_board(config, board_rng), policy, std::move(spotter), seeds,
                  options);
}

}  // namespace battleship
