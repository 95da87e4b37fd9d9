#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "battleship/engine.hpp"
#include "battleship/guesswho.hpp"
#include "battleship/llm.hpp"
#include "battleship/metrics.hpp"

namespace battleship::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitRuntimeError = 2;

// ---------------------------------------------------------------------------
// Shared option bundles

struct EndpointOptions {
  std::string url;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = -1.0;  // < 0 means unset
  int max_retries = 3;
  double rps = 4.0;
  std::string cassette;  // replay transport
  std::string record;    // record transport

  bool configured() const { return (!url.empty() && !model.empty()) || !cassette.empty(); }

  void attach(CLI::App* app) {
    app->add_option("--endpoint-url", url, "Chat-completions base URL, e.g. http://host:port/v1");
    app->add_option("--model", model, "Model name sent to the endpoint");
    app->add_option("--api-key-env", api_key_env,
                    "Environment variable holding the API key (never logged)");
    app->add_option("--temperature", temperature, "Sampling temperature passthrough");
    app->add_option("--max-retries", max_retries, "Retries per query on failure");
    app->add_option("--rps", rps, "Global request rate limit (requests/second)");
    app->add_option("--cassette", cassette, "Replay recorded responses from this cassette file");
    app->add_option("--record", record, "Record live responses into this cassette file");
  }

  std::shared_ptr<llm::LmClient> make_client() const {
    if (!configured()) return nullptr;
    llm::EndpointConfig cfg;
    cfg.base_url = url.empty() ? "cassette://local/v1" : url;
    cfg.model = model.empty() ? "cassette" : model;
    cfg.api_key_env = api_key_env;
    cfg.max_retries = max_retries;
    if (temperature >= 0.0) cfg.temperature = temperature;
    std::shared_ptr<llm::Transport> transport;
    if (!cassette.empty()) {
      transport = std::make_shared<llm::CassetteTransport>(
          llm::CassetteTransport::from_file(cassette));
    } else {
      transport = std::make_shared<llm::HttpTransport>(cfg);
      if (!record.empty())
        transport = std::make_shared<llm::RecordingTransport>(transport, record);
    }
    auto limiter = std::make_shared<llm::RateLimiter>(rps);
    return std::make_shared<llm::LmClient>(cfg, transport, limiter);
  }

  json to_json() const {
    return json{{"url", url},
                {"model", model},
                {"api_key_env", api_key_env},
                {"temperature", temperature},
                {"max_retries", max_retries},
                {"rps", rps},
                {"cassette", cassette},
                {"record", record}};
  }
};

struct GameOptions {
  int particles = 2000;
  double epsilon_belief = 0.1;
  double epsilon_channel = 0.1;
  std::string spotter = "noisy";  // oracle | noisy | lm
  double gamma = 1.0;
  int k = 10;
  int question_budget = -1;  // -1: from config default
  int move_budget = -1;
  bool snapshots = false;

  void attach(CLI::App* app) {
    app->add_option("--particles,-n", particles, "Belief particle count")->check(CLI::PositiveNumber);
    app->add_option("--epsilon-belief", epsilon_belief, "Captain's assumed answer-noise level")
        ->check(CLI::Range(0.0, 0.5));
    app->add_option("--epsilon-channel", epsilon_channel, "Actual spotter flip probability")
        ->check(CLI::Range(0.0, 0.5));
    app->add_option("--spotter", spotter, "Spotter kind: oracle, noisy or lm")
        ->check(CLI::IsMember({"oracle", "noisy", "lm"}));
    app->add_option("--gamma", gamma, "Lookahead discount for bayes-qmd")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("-k,--candidates", k, "Candidate questions per turn")
        ->check(CLI::PositiveNumber);
    app->add_option("--question-budget", question_budget, "Questions per game");
    app->add_option("--move-budget", move_budget, "Shots per game");
    app->add_flag("--snapshots", snapshots, "Embed per-turn hit-grid snapshots in trajectories");
  }

  void apply_budgets(BoardConfig& cfg) const {
    if (question_budget >= 0) cfg.question_budget = question_budget;
    if (move_budget >= 0) cfg.move_budget = move_budget;
  }

  json to_json() const {
    return json{{"particles", particles},
                {"epsilon_belief", epsilon_belief},
                {"epsilon_channel", epsilon_channel},
                {"spotter", spotter},
                {"gamma", gamma},
                {"k", k},
                {"question_budget", question_budget},
                {"move_budget", move_budget},
                {"snapshots", snapshots}};
  }

  void from_json(const json& j) {
    particles = j.at("particles");
    epsilon_belief = j.at("epsilon_belief");
    epsilon_channel = j.at("epsilon_channel");
    spotter = j.at("spotter");
    gamma = j.at("gamma");
    k = j.at("k");
    question_budget = j.at("question_budget");
    move_budget = j.at("move_budget");
    snapshots = j.at("snapshots");
  }
};

// ---------------------------------------------------------------------------
// Helpers

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SpotterChannel make_spotter(const GameOptions& opts, std::uint64_t spotter_seed,
                                   const BoardConfig& cfg,
                                   const std::shared_ptr<llm::LmClient>& client) {
  if (opts.spotter == "oracle") return SpotterChannel::oracle();
  if (opts.spotter == "noisy")
    return SpotterChannel::noisy(opts.epsilon_channel, Rng(spotter_seed));
  if (!client) throw std::invalid_argument("--spotter lm requires an endpoint or cassette");
  return llm::make_lm_spotter(client, cfg, true);
}

inline CaptainPolicy make_policy(const std::string& preset, const GameOptions& opts) {
  CaptainPolicy policy = CaptainPolicy::preset(preset);
  policy.gamma = opts.gamma;
  policy.k = opts.k;
  policy.validate();
  return policy;
}

// Text rendering of a partial board with row letters and column numbers.
inline std::string pretty_partial(const PartialBoard& partial) {
  std::string out = "   ";
  for (int c = 1; c <= partial.cols(); ++c) out += " " + std::to_string(c);
  out += '\n';
  for (int r = 0; r < partial.rows(); ++r) {
    out += ' ';
    out += static_cast<char>('A' + r);
    out += ' ';
    for (int c = 0; c < partial.cols(); ++c) {
      const CellValue v = partial.at({r, c});
      out += ' ';
      out += v == kHidden ? '.' : static_cast<char>('0' + v);
    }
    out += '\n';
  }
  return out;
}

inline std::string pretty_grid(const std::vector<double>& grid, int rows, int cols) {
  std::string out;
  for (int r = 0; r < rows; ++r) {
    out += ' ';
    out += static_cast<char>('A' + r);
    out += ' ';
    for (int c = 0; c < cols; ++c) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), " %4.2f", grid[static_cast<std::size_t>(r) * cols + c]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Saved belief state files (used by the eig subcommand and play --save-state)

struct SavedState {
  BoardConfig config;
  PartialBoard partial;
  double epsilon = 0.1;
  int particles = 2000;
  std::uint64_t seed = 0;
  ReplayLog answered;

  json to_json() const {
    json answered_json = json::array();
    for (const QuestionAnswer& qa : answered)
      answered_json.push_back({{"question", battleship::serialize(qa.question)},
                               {"answer", qa.answer},
                               {"context", serialize_partial(qa.context)}});
    return json{{"v", 1},
                {"type", "state"},
                {"config", config_to_json(config)},
                {"partial", serialize_partial(partial)},
                {"epsilon", epsilon},
                {"particles", particles},
                {"seed", seed},
                {"answered", answered_json}};
  }

  static SavedState from_json(const json& j) {
    SavedState s;
    s.config = config_from_json(j.at("config"));
    s.partial = parse_partial(j.at("partial").get<std::string>());
    s.epsilon = j.at("epsilon");
    s.particles = j.at("particles");
    s.seed = j.at("seed");
    for (const auto& qa : j.at("answered"))
      s.answered.push_back({parse_question(qa.at("question").get<std::string>(), s.config),
                            qa.at("answer").get<bool>(),
                            parse_partial(qa.at("context").get<std::string>())});
    return s;
  }

  ParticleBelief build_belief() const {
    Rng rng(seed);
    ParticleBelief belief =
        ParticleBelief::init(config, partial, particles, epsilon, rng);
    for (const QuestionAnswer& qa : answered)
      belief = belief.update_answer(qa.question, qa.answer, qa.context, rng);
    return belief;
  }
};

// Reconstructs the final belief state of a finished game from its trajectory.
inline SavedState state_from_trajectory(const Trajectory& traj, int particles, double epsilon,
                                        std::uint64_t seed) {
  SavedState s;
  s.config = traj.config;
  s.particles = particles;
  s.epsilon = epsilon;
  s.seed = seed;
  PartialBoard partial = PartialBoard::all_hidden(traj.config.rows, traj.config.cols);
  Question pending;
  bool have_pending = false;
  for (const Event& e : traj.events) {
    if (e.type == Event::Type::Question) {
      pending = parse_question(e.question_text, traj.config);
      have_pending = true;
    } else if (e.type == Event::Type::Answer && have_pending) {
      s.answered.push_back({pending, e.answer, partial});
      have_pending = false;
    } else if (e.type == Event::Type::Shot) {
      partial = partial.with_revealed(e.coord, e.cell);
    }
  }
  s.partial = partial;
  return s;
}

// ---------------------------------------------------------------------------
// sample-boards

inline int cmd_sample_boards(int count, std::uint64_t seed, const std::string& out_dir,
                             std::ostream& os) {
  BoardConfig cfg;
  fs::create_directories(out_dir);
  json manifest{{"v", 1},
                {"type", "board_manifest"},
                {"run_config", {{"count", count}, {"seed", seed}, {"out", out_dir}}},
                {"config", config_to_json(cfg)},
                {"boards", json::array()}};
  for (int i = 0; i < count; ++i) {
    const std::uint64_t board_seed = derive_seed(seed, 100, i);
    Rng rng(board_seed);
    const Board b = sample_board(cfg, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "B%03d.board", i + 1);
    write_file(fs::path(out_dir) / name, serialize_board(b) + "\n");
    manifest["boards"].push_back({{"file", name}, {"seed", board_seed}});
  }
  write_file(fs::path(out_dir) / "boards.json", manifest.dump(2) + "\n");
  os << "wrote " << count << " boards to " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// play

struct PlayConfig {
  std::string policy = "bayes-qmd";
  std::uint64_t seed = 1;
  std::string board_file;
  std::string out;
  std::string save_state;
  GameOptions game;
  EndpointOptions endpoint;

  json to_json() const {
    return json{{"subcommand", "play"}, {"policy", policy},
                {"seed", seed},         {"board_file", board_file},
                {"game", game.to_json()}};
  }
};

inline int cmd_play(const PlayConfig& pc, std::ostream& os) {
  BoardConfig cfg;
  Board truth;
  std::string board_id;
  const Seeds seeds{derive_seed(pc.seed, 1), derive_seed(pc.seed, 2), derive_seed(pc.seed, 3)};
  if (!pc.board_file.empty()) {
    truth = parse_board(read_file(pc.board_file));
    cfg = infer_config(truth);
    board_id = fs::path(pc.board_file).stem().string();
  } else {
    Rng rng(seeds.board);
    truth = sample_board(cfg, rng);
    board_id = "seed:" + std::to_string(seeds.board);
  }
  pc.game.apply_budgets(cfg);

  auto client = pc.endpoint.make_client();
  const CaptainPolicy policy = make_policy(pc.policy, pc.game);
  if (policy.uses_lm() && !client && pc.game.spotter != "lm") {
    // Informational: the run proceeds with Bayes substitutions.
    os << "note: no endpoint configured; external-LM rules use their Bayes fallbacks\n";
  }

  RunOptions opts;
  opts.n_particles = pc.game.particles;
  opts.epsilon_belief = pc.game.epsilon_belief;
  opts.snapshots = pc.game.snapshots;
  opts.board_id = board_id;
  opts.run_config = pc.to_json();
  if (client) opts.lm_provider = llm::make_lm_provider(client);

  SpotterChannel spotter = make_spotter(pc.game, seeds.spotter, cfg, client);
  Trajectory traj = run_game(cfg, truth, policy, spotter, seeds, opts);
  const GameMetrics m = finalize_metrics(traj);

  if (!pc.out.empty()) write_file(pc.out, traj.to_jsonl());
  if (!pc.save_state.empty()) {
    const SavedState state = state_from_trajectory(traj, pc.game.particles,
                                                   pc.game.epsilon_belief, derive_seed(pc.seed, 4));
    write_file(pc.save_state, state.to_json().dump(2) + "\n");
  }

  os << "outcome: " << outcome_name(traj.outcome) << "  f1: " << m.f1
     << "  moves: " << m.moves_used << "  questions: " << m.questions_used << "\n";
  if (!pc.out.empty()) os << "trajectory: " << pc.out << "\n";
  return traj.outcome == Outcome::Error ? kExitRuntimeError : kExitOk;
}

// Interactive mode: the human is the Captain, typing DSL questions and
// coordinates; answers come from the configured spotter.
inline int cmd_play_interactive(const PlayConfig& pc, std::istream& is, std::ostream& os) {
  BoardConfig cfg;
  Board truth;
  const Seeds seeds{derive_seed(pc.seed, 1), derive_seed(pc.seed, 2), derive_seed(pc.seed, 3)};
  if (!pc.board_file.empty()) {
    truth = parse_board(read_file(pc.board_file));
    cfg = infer_config(truth);
  } else {
    Rng rng(seeds.board);
    truth = sample_board(cfg, rng);
  }
  pc.game.apply_budgets(cfg);

  auto client = pc.endpoint.make_client();
  SpotterChannel spotter = make_spotter(pc.game, seeds.spotter, cfg, client);
  GameState state{truth, PartialBoard::all_hidden(cfg.rows, cfg.cols),
                  {cfg.question_budget, cfg.move_budget}, Outcome::Running};
  Rng rng(seeds.captain);
  ParticleBelief belief =
      ParticleBelief::init(cfg, state.partial, pc.game.particles, pc.game.epsilon_belief, rng);

  os << "Interactive Battleship. Commands: ask <question> | fire <coord> | board | grid | quit\n";
  os << pretty_partial(state.partial);
  std::string line;
  while (state.outcome == Outcome::Running) {
    os << "[q:" << state.budgets.questions_left << " m:" << state.budgets.moves_left << "]> "
       << std::flush;
    if (!std::getline(is, line)) break;
    std::istringstream ls(line);
    std::string cmd;
    ls >> cmd;
    try {
      if (cmd == "quit" || cmd == "exit") break;
      if (cmd == "board") {
        os << pretty_partial(state.partial);
        continue;
      }
      if (cmd == "grid") {
        os << pretty_grid(belief.hit_probability_grid(state.partial).p, cfg.rows, cfg.cols);
        continue;
      }
      if (cmd == "ask") {
        std::string rest;
        std::getline(ls, rest);
        const Question q = parse_question(rest, cfg);
        if (state.budgets.questions_left <= 0) {
          os << "no questions left\n";
          continue;
        }
        Decision d;
        d.kind = Decision::Kind::Ask;
        d.question = q;
        d.p_yes = belief.yes_probability(q, state.partial);
        d.eig = eig_bsc(d.p_yes, belief.epsilon());
        const PartialBoard before = state.partial;
        auto sr = step(state, d, spotter);
        state = sr.state;
        const bool answer = sr.events.back().answer;
        belief = belief.update_answer(q, answer, before, rng);
        os << (answer ? "Yes" : "No") << "  (eig at ask time: " << d.eig << " bits)\n";
        continue;
      }
      if (cmd == "fire") {
        std::string coord_text;
        ls >> coord_text;
        const auto coord = parse_coord(coord_text, cfg.rows, cfg.cols);
        if (!coord) {
          os << "bad coordinate\n";
          continue;
        }
        if (!state.partial.is_hidden(*coord)) {
          os << "already revealed\n";
          continue;
        }
        Decision d;
        d.kind = Decision::Kind::Fire;
        d.target = *coord;
        auto sr = step(state, d, spotter);
        state = sr.state;
        belief = belief.update_reveal(*coord, truth.at(*coord), state.partial, rng);
        const Event& shot = sr.events.front();
        os << (shot.hit ? "hit" : "miss");
        if (shot.sunk) os << ", sunk the " << color_name(*shot.sunk) << " ship";
        os << "\n" << pretty_partial(state.partial);
        continue;
      }
      os << "commands: ask <question> | fire <coord> | board | grid | quit\n";
    } catch (const std::exception& e) {
      os << "error: " << e.what() << "\n";
    }
  }
  os << "outcome: " << outcome_name(state.outcome) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// tournament

struct TournamentConfig {
  std::vector<std::string> policies = {"random", "greedy", "bayes-qm", "bayes-qmd"};
  int boards = 18;
  int seeds = 3;
  std::uint64_t master_seed = 1;
  std::string board_dir;
  std::string out = "tournament_out";
  int jobs = 0;  // 0: hardware concurrency
  GameOptions game;
  EndpointOptions endpoint;

  json to_json() const {
    return json{{"subcommand", "tournament"},
                {"policies", policies},
                {"boards", boards},
                {"seeds", seeds},
                {"master_seed", master_seed},
                {"board_dir", board_dir},
                {"game", game.to_json()}};
  }
};

inline int cmd_tournament(const TournamentConfig& tc, std::ostream& os) {
  BoardConfig cfg;
  tc.game.apply_budgets(cfg);

  // Board set: sampled from the master seed, or loaded from .board files.
  struct BoardEntry {
    std::string id;
    Board truth;
    std::uint64_t seed;
  };
  std::vector<BoardEntry> boards;
  if (!tc.board_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(tc.board_dir))
      if (entry.path().extension() == ".board") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      boards.push_back({f.stem().string(), parse_board(read_file(f)), 0});
    }
    if (boards.empty()) throw std::invalid_argument("no .board files in " + tc.board_dir);
    cfg = infer_config(boards[0].truth);
    tc.game.apply_budgets(cfg);
  } else {
    for (int b = 0; b < tc.boards; ++b) {
      const std::uint64_t seed = derive_seed(tc.master_seed, 100, b);
      Rng rng(seed);
      char id[16];
      std::snprintf(id, sizeof(id), "B%03d", b + 1);
      boards.push_back({id, sample_board(cfg, rng), seed});
    }
  }

  auto client = tc.endpoint.make_client();

  struct GameSpec {
    std::size_t policy_idx;
    std::size_t board_idx;
    int rep;
  };
  std::vector<GameSpec> specs;
  for (std::size_t p = 0; p < tc.policies.size(); ++p)
    for (std::size_t b = 0; b < boards.size(); ++b)
      for (int r = 0; r < tc.seeds; ++r) specs.push_back({p, b, r});

  std::vector<Trajectory> results(specs.size());
  std::atomic<std::size_t> next{0};
  const int jobs = tc.jobs > 0 ? tc.jobs
                               : std::max(1u, std::thread::hardware_concurrency());
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      const GameSpec& spec = specs[i];
      const BoardEntry& board = boards[spec.board_idx];
      // Captain/spotter streams shared across policies for matched play.
      Seeds seeds{board.seed, derive_seed(tc.master_seed, 200, spec.board_idx, spec.rep),
                  derive_seed(tc.master_seed, 300, spec.board_idx, spec.rep)};
      RunOptions opts;
      opts.n_particles = tc.game.particles;
      opts.epsilon_belief = tc.game.epsilon_belief;
      opts.snapshots = tc.game.snapshots;
      opts.board_id = board.id;
      opts.run_config = tc.to_json();
      if (client) opts.lm_provider = llm::make_lm_provider(client);
      const CaptainPolicy policy = make_policy(tc.policies[spec.policy_idx], tc.game);
      SpotterChannel spotter = make_spotter(tc.game, seeds.spotter, cfg, client);
      Trajectory traj = run_game(cfg, board.truth, policy, spotter, seeds, opts);
      finalize_metrics(traj);
      results[i] = std::move(traj);
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // Single collector writes everything in deterministic order.
  bool any_error = false;
  std::map<std::string, std::vector<Trajectory>> by_policy;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const GameSpec& spec = specs[i];
    const fs::path dir = fs::path(tc.out) / "trajectories" / tc.policies[spec.policy_idx];
    char name[48];
    std::snprintf(name, sizeof(name), "%s_s%02d.jsonl", boards[spec.board_idx].id.c_str(),
                  spec.rep);
    write_file(dir / name, results[i].to_jsonl());
    any_error = any_error || results[i].outcome == Outcome::Error;
    by_policy[tc.policies[spec.policy_idx]].push_back(std::move(results[i]));
  }

  std::vector<PolicySummary> summaries;
  for (const std::string& p : tc.policies)
    summaries.push_back(PolicySummary::from(p, by_policy.at(p)));

  std::map<std::pair<std::string, std::string>, double> matrix;
  for (const std::string& a : tc.policies)
    for (const std::string& b : tc.policies)
      if (a != b) matrix[{a, b}] = win_rate(by_policy.at(a), by_policy.at(b));

  json summary_json{{"v", 1},
                    {"type", "tournament_summary"},
                    {"run_config", tc.to_json()},
                    {"policies", json::array()},
                    {"win_rate", json::object()}};
  for (const PolicySummary& s : summaries) summary_json["policies"].push_back(s.to_json());
  for (const auto& [key, value] : matrix)
    summary_json["win_rate"][key.first + "_vs_" + key.second] = value;

  write_file(fs::path(tc.out) / "summary.csv", summaries_to_csv(summaries));
  write_file(fs::path(tc.out) / "winrate.csv", win_matrix_to_csv(tc.policies, matrix));
  write_file(fs::path(tc.out) / "summary.json", summary_json.dump(2) + "\n");

  os << summaries_to_csv(summaries);
  os << "\nwin rates (row beats column):\n" << win_matrix_to_csv(tc.policies, matrix);
  os << "\nwrote " << specs.size() << " trajectories to " << tc.out << "\n";
  return any_error ? kExitRuntimeError : kExitOk;
}

// ---------------------------------------------------------------------------
// replay

inline int cmd_replay(const std::string& path, std::ostream& os) {
  const Trajectory traj = Trajectory::from_jsonl(read_file(path));
  os << "policy: " << traj.policy_name << "  board: " << traj.board_id
     << "  outcome: " << outcome_name(traj.outcome) << "\n";
  PartialBoard partial = PartialBoard::all_hidden(traj.config.rows, traj.config.cols);
  int turn = 0;
  for (const Event& e : traj.events) {
    switch (e.type) {
      case Event::Type::Question:
        os << "turn " << ++turn << "  ask " << e.question_text << "  (eig " << e.eig << ", p_yes "
           << e.p_yes << ", source " << e.question_source << ")\n";
        break;
      case Event::Type::Answer:
        os << "        answer: " << (e.answer ? "Yes" : "No") << " [" << e.channel << "]\n";
        break;
      case Event::Type::Shot:
        partial = partial.with_revealed(e.coord, e.cell);
        os << "turn " << ++turn << "  fire " << e.coord.to_string() << "  "
           << (e.hit ? "hit" : "miss");
        if (e.sunk) os << " (sunk " << color_name(*e.sunk) << ")";
        os << "\n" << pretty_partial(partial);
        break;
      case Event::Type::Fallback: os << "        fallback: " << e.reason << "\n"; break;
      case Event::Type::Snapshot:
        os << "        hit grid:\n"
           << pretty_grid(e.hit_grid, traj.config.rows, traj.config.cols);
        break;
    }
  }
  if (!traj.metrics.is_null()) os << "metrics: " << traj.metrics.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eig

inline int cmd_eig(const std::string& state_path, const std::string& question_text,
                   std::ostream& os) {
  const SavedState state = SavedState::from_json(json::parse(read_file(state_path)));
  const Question q = parse_question(question_text, state.config);
  const ParticleBelief belief = state.build_belief();
  const double p = belief.yes_probability(q, state.partial);
  const double e = eig_bsc(p, belief.epsilon());
  os << "question: " << battleship::serialize(q) << "\n";
  os << "p_yes: " << p << "\n";
  os << "eig_bits: " << e << "\n";
  os << "ceiling: " << 1.0 - binary_entropy(belief.epsilon()) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// guesswho

struct GuessWhoConfig {
  std::string roster_file;
  std::string policy = "bayes-qm";
  int games = 1;
  int budget = 8;
  std::uint64_t seed = 1;
  double epsilon_belief = 0.0;
  double epsilon_channel = 0.0;
  std::string spotter = "oracle";  // oracle | noisy | lm
  std::string out;
  EndpointOptions endpoint;

  json to_json() const {
    return json{{"subcommand", "guesswho"},
                {"roster_file", roster_file},
                {"policy", policy},
                {"games", games},
                {"budget", budget},
                {"seed", seed},
                {"epsilon_belief", epsilon_belief},
                {"epsilon_channel", epsilon_channel},
                {"spotter", spotter}};
  }
};

inline int cmd_guesswho(const GuessWhoConfig& gc, std::ostream& os) {
  using namespace guesswho;
  const Roster roster = Roster::load(gc.roster_file);
  auto client = gc.endpoint.make_client();

  int wins = 0;
  double eig_total = 0.0;
  long eig_count = 0, redundant = 0;
  for (int g = 0; g < gc.games; ++g) {
    const std::uint64_t game_seed = derive_seed(gc.seed, 400, g);
    GwSpotter spotter = gc.spotter == "noisy"
                            ? GwSpotter::noisy(gc.epsilon_channel, Rng(derive_seed(game_seed, 1)))
                            : GwSpotter::oracle();
    GwRunOptions opts;
    opts.epsilon_belief = gc.epsilon_belief;
    opts.run_config = gc.to_json();
    if (client) opts.lm_provider = llm::make_gw_lm_provider(client, roster, gc.budget);
    const GwResult res =
        run_guesswho(roster, GwPolicy::preset(gc.policy), spotter, gc.budget, game_seed, opts);
    wins += res.win;
    for (const GwEvent& e : res.events)
      if (e.type == GwEvent::Type::Question) {
        eig_total += e.eig;
        ++eig_count;
        redundant += e.eig < 1e-9;
      }
    if (!gc.out.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "gw_%04d.jsonl", g);
      write_file(fs::path(gc.out) / name, res.to_jsonl());
    }
  }
  json summary{{"v", 1},
               {"type", "guesswho_summary"},
               {"run_config", gc.to_json()},
               {"games", gc.games},
               {"wins", wins},
               {"success_rate", static_cast<double>(wins) / gc.games}};
  summary["mean_eig"] = eig_count > 0 ? json(eig_total / eig_count) : json(nullptr);
  summary["redundant_fraction"] =
      eig_count > 0 ? json(static_cast<double>(redundant) / eig_count) : json(nullptr);
  if (!gc.out.empty()) write_file(fs::path(gc.out) / "summary.json", summary.dump(2) + "\n");
  os << summary.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// dispatch

inline int dispatch(std::vector<std::string> args, std::istream& is = std::cin,
                    std::ostream& os = std::cout) {
  CLI::App app{"Collaborative Battleship: Bayesian information-seeking agents"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read options from a key=value config file with [subcommand] sections; "
                 "precedence: flags > config file > defaults");

  // sample-boards
  auto* sample = app.add_subcommand("sample-boards", "Sample boards and write .board files");
  int sample_count = 18;
  std::uint64_t sample_seed = 1;
  std::string sample_out = "boards";
  sample->add_option("--count", sample_count, "Number of boards")->check(CLI::PositiveNumber);
  sample->add_option("--seed", sample_seed, "Master seed");
  sample->add_option("--out", sample_out, "Output directory");

  // play
  auto* play = app.add_subcommand("play", "Run one game and write a trajectory");
  PlayConfig pc;
  bool interactive = false;
  std::string rerun;
  play->add_option("--policy", pc.policy,
                   "random | greedy | lm | bayes-q | bayes-m | bayes-qm | bayes-qmd");
  play->add_option("--seed", pc.seed, "Master seed (board/captain/spotter derive from it)");
  play->add_option("--board", pc.board_file, "Play on a .board file instead of sampling");
  play->add_option("--out", pc.out, "Trajectory output path (JSONL)");
  play->add_option("--save-state", pc.save_state, "Write the final belief state as JSON");
  play->add_option("--rerun", rerun, "Reproduce a run from a trajectory's embedded run config");
  play->add_flag("--interactive", interactive, "Type questions and shots at a prompt");
  pc.game.attach(play);
  pc.endpoint.attach(play);

  // tournament
  auto* tour = app.add_subcommand("tournament", "Run a policy x board x seed grid");
  TournamentConfig tc;
  std::string policies_csv = "random,greedy,bayes-qm,bayes-qmd";
  tour->add_option("--policies", policies_csv, "Comma-separated policy presets");
  tour->add_option("--boards", tc.boards, "Number of sampled boards")->check(CLI::PositiveNumber);
  tour->add_option("--board-dir", tc.board_dir, "Directory of .board files (overrides --boards)");
  tour->add_option("--seeds", tc.seeds, "Repetitions per board")->check(CLI::PositiveNumber);
  tour->add_option("--seed", tc.master_seed, "Master seed");
  tour->add_option("--out", tc.out, "Output directory");
  tour->add_option("--jobs", tc.jobs, "Worker threads (default: logical cores)");
  tc.game.attach(tour);
  tc.endpoint.attach(tour);

  // replay
  auto* replay = app.add_subcommand("replay", "Pretty-print a trajectory turn by turn");
  std::string replay_path;
  replay->add_option("--traj", replay_path, "Trajectory file")->required();

  // eig
  auto* eig = app.add_subcommand("eig", "Score a question against a saved state");
  std::string eig_state, eig_question;
  eig->add_option("--state", eig_state, "Saved state JSON (see play --save-state)")->required();
  eig->add_option("--question", eig_question, "Question in the s-expression grammar")->required();

  // guesswho
  auto* gw = app.add_subcommand("guesswho", "Run entity-guessing games on a roster");
  GuessWhoConfig gc;
  gw->add_option("--roster", gc.roster_file, "Roster JSON file")->required();
  gw->add_option("--policy", gc.policy, "lm | bayes-q | bayes-m | bayes-qm");
  gw->add_option("--games", gc.games, "Number of games")->check(CLI::PositiveNumber);
  gw->add_option("--budget", gc.budget, "Questions per game");
  gw->add_option("--seed", gc.seed, "Master seed");
  gw->add_option("--epsilon-belief", gc.epsilon_belief, "Assumed answer noise")
      ->check(CLI::Range(0.0, 0.5));
  gw->add_option("--epsilon-channel", gc.epsilon_channel, "Actual answer noise")
      ->check(CLI::Range(0.0, 0.5));
  gw->add_option("--spotter", gc.spotter, "oracle | noisy | lm")
      ->check(CLI::IsMember({"oracle", "noisy", "lm"}));
  gw->add_option("--out", gc.out, "Output directory for trajectories and summary");
  gc.endpoint.attach(gw);

  std::vector<const char*> argv;
  argv.push_back("battleship");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::stringstream dummy;
    const int code = app.exit(e, os, os);
    return code == 0 ? kExitOk : kExitUserError;
  }

  try {
    if (sample->parsed()) return cmd_sample_boards(sample_count, sample_seed, sample_out, os);
    if (play->parsed()) {
      if (!rerun.empty()) {
        const Trajectory prev = Trajectory::from_jsonl(read_file(rerun));
        if (prev.run_config.is_null() || prev.run_config.value("subcommand", "") != "play")
          throw std::invalid_argument("trajectory has no embedded play run config");
        PlayConfig rc;
        rc.policy = prev.run_config.at("policy");
        rc.seed = prev.run_config.at("seed");
        rc.board_file = prev.run_config.at("board_file");
        rc.game.from_json(prev.run_config.at("game"));
        rc.out = pc.out;
        rc.save_state = pc.save_state;
        return cmd_play(rc, os);
      }
      if (interactive) return cmd_play_interactive(pc, is, os);
      return cmd_play(pc, os);
    }
    if (tour->parsed()) {
      tc.policies.clear();
      std::istringstream ps(policies_csv);
      std::string tok;
      while (std::getline(ps, tok, ','))
        if (!tok.empty()) tc.policies.push_back(tok);
      if (tc.policies.empty()) throw std::invalid_argument("no policies given");
      return cmd_tournament(tc, os);
    }
    if (replay->parsed()) return cmd_replay(replay_path, os);
    if (eig->parsed()) return cmd_eig(eig_state, eig_question, os);
    if (gw->parsed()) return cmd_guesswho(gc, os);
  } catch (const std::invalid_argument& e) {
    os << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    os << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitUserError;
}

}  // namespace battleship::cli
