#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "battleship/cli.hpp"
#include "test_support.hpp"

using namespace battleship;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

int run(const std::vector<std::string>& args, std::string* output = nullptr,
        const std::string& input = "") {
  std::istringstream is(input);
  std::ostringstream os;
  const int code = cli::dispatch(args, is, os);
  if (output) *output = os.str();
  return code;
}

}  // namespace

TEST_CASE("sample-boards writes valid board files plus a manifest", "[cli]") {
  TempDir dir("bs_cli_sample");
  std::string out;
  const int code = run({"sample-boards", "--count", "4", "--seed", "9", "--out", dir.str()}, &out);
  CHECK(code == cli::kExitOk);
  int boards = 0;
  for (const auto& entry : fs::directory_iterator(dir.path))
    if (entry.path().extension() == ".board") {
      ++boards;
      const Board b = parse_board(cli::read_file(entry.path()));
      CHECK(board_valid(b, infer_config(b)));
    }
  CHECK(boards == 4);
  const json manifest = json::parse(cli::read_file(dir.path / "boards.json"));
  CHECK(manifest.at("boards").size() == 4);
  CHECK(manifest.at("run_config").at("seed") == 9);
}

TEST_CASE("play writes a reproducible trajectory", "[cli]") {
  TempDir dir("bs_cli_play");
  std::string out;
  const std::vector<std::string> args = {"play", "--policy", "bayes-qmd", "--seed",  "7",
                                         "--particles", "200", "--out", dir.str("a.jsonl")};
  CHECK(run(args, &out) == cli::kExitOk);
  CHECK(out.find("outcome:") != std::string::npos);

  std::vector<std::string> args_b = args;
  args_b.back() = dir.str("b.jsonl");
  CHECK(run(args_b) == cli::kExitOk);
  CHECK(cli::read_file(dir.str("a.jsonl")) == cli::read_file(dir.str("b.jsonl")));

  // Rerunning from the embedded header reproduces the file byte-for-byte.
  std::vector<std::string> rerun = {"play", "--rerun", dir.str("a.jsonl"), "--out",
                                    dir.str("c.jsonl")};
  CHECK(run(rerun) == cli::kExitOk);
  CHECK(cli::read_file(dir.str("a.jsonl")) == cli::read_file(dir.str("c.jsonl")));
}

TEST_CASE("play on a board file and saved states feed the eig command", "[cli]") {
  TempDir dir("bs_cli_state");
  REQUIRE(run({"sample-boards", "--count", "1", "--seed", "3", "--out", dir.str()}) ==
          cli::kExitOk);
  const std::string board = dir.str("B001.board");
  std::string out;
  CHECK(run({"play", "--policy", "bayes-qm", "--seed", "5", "--particles", "300", "--board",
             board, "--save-state", dir.str("state.json")},
            &out) == cli::kExitOk);
  REQUIRE(fs::exists(dir.str("state.json")));

  std::string eig_out;
  const int code = run(
      {"eig", "--state", dir.str("state.json"), "--question", "(any-ship (row C))"}, &eig_out);
  CHECK(code == cli::kExitOk);
  CHECK(eig_out.find("eig_bits:") != std::string::npos);
  // Value within [0, 1 - H_b(eps)].
  const double eig = std::stod(eig_out.substr(eig_out.find("eig_bits:") + 9));
  CHECK(eig >= 0.0);
  CHECK(eig <= 1.0 - binary_entropy(0.1) + 1e-9);
}

TEST_CASE("tournament produces the full grid and metric artifacts", "[cli]") {
  TempDir dir("bs_cli_tour");
  std::string out;
  const int code = run({"tournament", "--policies", "random,greedy", "--boards", "3", "--seeds",
                        "2", "--seed", "11", "--particles", "100", "--out", dir.str(), "--jobs",
                        "2"},
                       &out);
  CHECK(code == cli::kExitOk);
  int files = 0;
  for (const auto& policy : {"random", "greedy"}) {
    const fs::path tdir = dir.path / "trajectories" / policy;
    REQUIRE(fs::exists(tdir));
    for (const auto& entry : fs::directory_iterator(tdir)) {
      ++files;
      const Trajectory t = Trajectory::from_jsonl(cli::read_file(entry.path()));
      CHECK_FALSE(t.metrics.is_null());
      CHECK_FALSE(t.run_config.is_null());
    }
  }
  CHECK(files == 12);  // 2 policies x 3 boards x 2 seeds

  const std::string csv = cli::read_file(dir.path / "summary.csv");
  CHECK(csv.find("policy,games,wins,f1,precision,recall,moves,questions,mean_eig,"
                 "redundant_fraction") == 0);
  CHECK(csv.find("random,6,") != std::string::npos);

  const json summary = json::parse(cli::read_file(dir.path / "summary.json"));
  CHECK(summary.at("policies").size() == 2);
  const double rg = summary.at("win_rate").at("random_vs_greedy").get<double>();
  const double gr = summary.at("win_rate").at("greedy_vs_random").get<double>();
  CHECK_THAT(rg + gr, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK(fs::exists(dir.path / "winrate.csv"));
}

TEST_CASE("replay pretty-prints a recorded game", "[cli]") {
  TempDir dir("bs_cli_replay");
  REQUIRE(run({"play", "--policy", "greedy", "--seed", "13", "--particles", "100", "--out",
               dir.str("t.jsonl")}) == cli::kExitOk);
  std::string out;
  CHECK(run({"replay", "--traj", dir.str("t.jsonl")}, &out) == cli::kExitOk);
  CHECK(out.find("policy: greedy") != std::string::npos);
  CHECK(out.find("fire") != std::string::npos);
  CHECK(out.find("metrics:") != std::string::npos);
}

TEST_CASE("guesswho subcommand runs seeded games against a roster", "[cli]") {
  TempDir dir("bs_cli_gw");
  std::string out;
  const std::string roster = std::string(BATTLESHIP_ROSTER_DIR) + "/classic24.json";
  const int code = run({"guesswho", "--roster", roster, "--policy", "bayes-qm", "--games", "5",
                        "--budget", "5", "--seed", "2", "--out", dir.str()},
                       &out);
  CHECK(code == cli::kExitOk);
  const json summary = json::parse(out);
  CHECK(summary.at("games") == 5);
  CHECK(summary.at("success_rate").get<double>() >= 0.8);  // 2^5 = 32 > 24
  CHECK(fs::exists(dir.path / "summary.json"));
  CHECK(fs::exists(dir.path / "gw_0000.jsonl"));
}

TEST_CASE("interactive play accepts typed questions and shots", "[cli]") {
  std::string out;
  // Fire a few deterministic cells, ask one question, then quit.
  const int code = run({"play", "--interactive", "--seed", "3", "--particles", "60",
                        "--spotter", "oracle"},
                       &out, "ask (any-ship (row A))\nfire A1\ngrid\nquit\n");
  CHECK(code == cli::kExitOk);
  CHECK(out.find("Interactive Battleship") != std::string::npos);
  CHECK((out.find("Yes") != std::string::npos || out.find("No") != std::string::npos));
  CHECK((out.find("hit") != std::string::npos || out.find("miss") != std::string::npos));
}

TEST_CASE("config files feed defaults below explicit flags", "[cli]") {
  TempDir dir("bs_cli_config");
  // Config sets particles and policy; the flag overrides the policy.
  cli::write_file(dir.path / "run.ini",
                  "[play]\npolicy=greedy\nparticles=150\nseed=21\n");
  std::string out_a, out_b;
  CHECK(run({"--config", dir.str("run.ini"), "play", "--out", dir.str("a.jsonl")}, &out_a) ==
        cli::kExitOk);
  const Trajectory a = Trajectory::from_jsonl(cli::read_file(dir.str("a.jsonl")));
  CHECK(a.policy_name == "greedy");
  CHECK(a.options.at("particles") == 150);

  CHECK(run({"--config", dir.str("run.ini"), "play", "--policy", "random", "--out",
             dir.str("b.jsonl")},
            &out_b) == cli::kExitOk);
  const Trajectory b = Trajectory::from_jsonl(cli::read_file(dir.str("b.jsonl")));
  CHECK(b.policy_name == "random");  // flag beats config file
}

TEST_CASE("cli reports user errors with exit code 1", "[cli]") {
  std::string out;
  CHECK(run({"play", "--policy", "nonsense"}, &out) == cli::kExitUserError);
  CHECK(run({"frobnicate"}, &out) == cli::kExitUserError);
  CHECK(run({"replay", "--traj", "/nonexistent/file.jsonl"}, &out) == cli::kExitUserError);
  CHECK(run({"eig", "--state", "/nonexistent.json", "--question", "(any-ship (row A))"}, &out) ==
        cli::kExitUserError);
}
