#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "battleship/board.hpp"
#include "battleship/enumeration.hpp"
#include "test_support.hpp"

using namespace battleship;

TEST_CASE("default config validates and counts ship cells", "[board]") {
  BoardConfig cfg;
  cfg.validate();
  CHECK(cfg.total_ship_cells() == 14);
  CHECK(cfg.rows == 8);
  CHECK(cfg.question_budget == 15);
  CHECK(cfg.move_budget == 40);
}

TEST_CASE("config invariants are enforced", "[board]") {
  BoardConfig cfg;
  cfg.ships = {{ShipColor::Red, 1}};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.ships = {{ShipColor::Red, 2}, {ShipColor::Red, 3}};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = BoardConfig{};
  cfg.rows = 2;
  cfg.cols = 2;  // 14 ship cells cannot fit
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = BoardConfig{};
  cfg.question_budget = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("sampling is deterministic under a fixed seed", "[board]") {
  BoardConfig cfg;
  Rng a(7), b(7);
  const Board ba = sample_board(cfg, a);
  const Board bb = sample_board(cfg, b);
  CHECK(ba == bb);
  CHECK(board_valid(ba, cfg));
}

TEST_CASE("sampled boards satisfy the shape invariants", "[board]") {
  BoardConfig cfg;
  Rng rng(123);
  for (int i = 0; i < 10'000; ++i) {
    Rng seeded(rng.next());
    CHECK(board_valid(sample_board(cfg, seeded), cfg));
  }
}

TEST_CASE("2x2 single-ship placements are uniform", "[board]") {
  BoardConfig cfg;
  cfg.rows = 2;
  cfg.cols = 2;
  cfg.ships = {{ShipColor::Red, 2}};
  cfg.move_budget = 4;
  Rng rng(99);
  std::map<std::string, long> counts;
  const int draws = 100'000;
  for (int i = 0; i < draws; ++i) counts[serialize_board(sample_board(cfg, rng))]++;
  REQUIRE(counts.size() == 4);
  for (const auto& [key, count] : counts)
    CHECK_THAT(count / static_cast<double>(draws),
               Catch::Matchers::WithinAbs(0.25, 0.02));
}

TEST_CASE("4x4 sampling matches exhaustive enumeration (chi-square)", "[board]") {
  const BoardConfig cfg = testsup::tiny_config();
  const auto boards = enumerate_boards(cfg);
  REQUIRE(boards.size() > 100);
  for (const Board& b : boards) CHECK(board_valid(b, cfg));
  const auto index = testsup::board_index(boards);

  Rng rng(2024);
  std::vector<long> counts(boards.size(), 0);
  const long draws = 120'000;
  for (long i = 0; i < draws; ++i) {
    auto it = index.find(serialize_board(sample_board(cfg, rng)));
    REQUIRE(it != index.end());
    counts[it->second]++;
  }
  const auto res = testsup::chi2_uniform(counts, draws, 0.01);
  INFO("chi2 = " << res.statistic << " critical = " << res.critical << " df = " << res.df);
  CHECK(res.pass);
}

TEST_CASE("infeasible configs are rejected by the sampler guard", "[board]") {
  BoardConfig cfg;
  cfg.rows = 2;
  cfg.cols = 3;
  // Two length-3 ships cannot coexist without touching on a 2x3 board.
  cfg.ships = {{ShipColor::Red, 3}, {ShipColor::Green, 3}};
  cfg.allow_touching = false;
  Rng rng(1);
  CHECK_THROWS_AS(sample_board(cfg, rng), InfeasibleConfigError);
}

TEST_CASE("no-touch configs keep ships apart", "[board]") {
  BoardConfig cfg = testsup::tiny_config();
  cfg.allow_touching = false;
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Board b = sample_board(cfg, rng);
    CHECK(board_valid(b, cfg));
  }
}

TEST_CASE("consistency checks hold for any reveal subset", "[board]") {
  BoardConfig cfg;
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Board b = sample_board(cfg, rng);
    const PartialBoard p = testsup::random_partial(b, static_cast<int>(rng.below(30)), rng);
    CHECK(is_consistent(b, p));
  }
}

TEST_CASE("consistency examples", "[board]") {
  BoardConfig cfg;
  Rng rng(3);
  const Board b = sample_board(cfg, rng);
  CHECK(is_consistent(b, PartialBoard::all_hidden(8, 8)));

  // Reveal water at a true-ship cell: inconsistent.
  const Coord ship_cell = b.ship_cells(ShipColor::Red)[0];
  auto wrong = PartialBoard::all_hidden(8, 8).with_revealed(ship_cell, kWater);
  CHECK_FALSE(is_consistent(b, wrong));

  CHECK_THROWS_AS(is_consistent(b, PartialBoard::all_hidden(4, 4)), std::invalid_argument);
}

TEST_CASE("consistent counts match a brute-force filter on 4x4", "[board]") {
  const BoardConfig cfg = testsup::tiny_config();
  const auto boards = enumerate_boards(cfg);
  Rng rng(21);
  const Board truth = sample_board(cfg, rng);
  const PartialBoard partial = testsup::random_partial(truth, 3, rng);

  long brute = 0;
  for (const Board& b : boards)
    if (is_consistent(b, partial)) ++brute;
  const auto filtered = enumerate_consistent_boards(cfg, partial);
  CHECK(static_cast<long>(filtered.size()) == brute);
  REQUIRE(brute > 0);
}

TEST_CASE("consistent sampling equals prior sampling on an all-hidden partial", "[board]") {
  const BoardConfig cfg = testsup::tiny_config();
  const auto partial = PartialBoard::all_hidden(4, 4);
  Rng a(42), b(42);
  // Identical rng stream and identical proposal sets: identical boards.
  for (int i = 0; i < 50; ++i)
    CHECK(sample_board(cfg, a) == sample_board_consistent(cfg, partial, b));
}

TEST_CASE("consistent sampling honors a fully revealed ship", "[board]") {
  BoardConfig cfg;
  Rng rng(17);
  const Board truth = sample_board(cfg, rng);
  auto partial = PartialBoard::all_hidden(8, 8);
  for (Coord c : truth.ship_cells(ShipColor::Purple))
    partial = partial.with_revealed(c, truth.at(c));
  for (int i = 0; i < 100; ++i) {
    const Board s = sample_board_consistent(cfg, partial, rng);
    CHECK(s.ship_cells(ShipColor::Purple) == truth.ship_cells(ShipColor::Purple));
    CHECK(is_consistent(s, partial));
  }
}

TEST_CASE("consistent sampling matches conditional enumeration frequencies", "[board]") {
  const BoardConfig cfg = testsup::tiny_config();
  Rng rng(31);
  const Board truth = sample_board(cfg, rng);
  const PartialBoard partial = testsup::random_partial(truth, 4, rng);
  const auto consistent = enumerate_consistent_boards(cfg, partial);
  REQUIRE(consistent.size() > 1);
  const auto index = testsup::board_index(consistent);

  std::vector<long> counts(consistent.size(), 0);
  const long draws = 60'000;
  for (long i = 0; i < draws; ++i) {
    auto it = index.find(serialize_board(sample_board_consistent(cfg, partial, rng)));
    REQUIRE(it != index.end());
    counts[it->second]++;
  }
  const auto res = testsup::chi2_uniform(counts, draws, 0.01);
  INFO("chi2 = " << res.statistic << " critical = " << res.critical << " df = " << res.df);
  CHECK(res.pass);
}

TEST_CASE("depleted consistent sampling throws", "[board]") {
  const BoardConfig cfg = testsup::tiny_config();
  // A partial no board can complete: a lone red cell fenced in by water on
  // all sides cannot host a length-2 ship.
  auto partial = PartialBoard::all_hidden(4, 4);
  partial = partial.with_revealed({1, 1}, static_cast<CellValue>(ShipColor::Red));
  partial = partial.with_revealed({0, 1}, kWater);
  partial = partial.with_revealed({2, 1}, kWater);
  partial = partial.with_revealed({1, 0}, kWater);
  partial = partial.with_revealed({1, 2}, kWater);
  Rng rng(8);
  CHECK_THROWS_AS(sample_board_consistent(cfg, partial, rng, 1000), DepletedError);
}

TEST_CASE("reveal reports hits, misses and sunk ships", "[board]") {
  BoardConfig cfg;
  Rng rng(13);
  const Board b = sample_board(cfg, rng);
  auto partial = PartialBoard::all_hidden(8, 8);

  Coord water{0, 0};
  for (int r = 0; r < 8 && b.at(water) != kWater; ++r)
    for (int c = 0; c < 8; ++c)
      if (b.at({r, c}) == kWater) water = {r, c};
  auto miss = reveal(b, partial, water);
  CHECK_FALSE(miss.hit);
  CHECK_FALSE(miss.sunk.has_value());
  CHECK(miss.partial.at(water) == kWater);

  // Sink the length-2 ship cell by cell.
  const auto& red = b.ship_cells(ShipColor::Red);
  auto r1 = reveal(b, partial, red[0]);
  CHECK(r1.hit);
  CHECK_FALSE(r1.sunk.has_value());
  auto r2 = reveal(b, r1.partial, red[1]);
  CHECK(r2.hit);
  REQUIRE(r2.sunk.has_value());
  CHECK(*r2.sunk == ShipColor::Red);

  // Re-revealing is a no-op that still reports the true cell.
  auto r3 = reveal(b, r2.partial, red[1]);
  CHECK(r3.hit);
  CHECK(r3.partial == r2.partial);

  CHECK_THROWS_AS(reveal(b, partial, Coord{8, 0}), std::invalid_argument);
}

TEST_CASE("reveal changes only the target cell", "[board]") {
  BoardConfig cfg;
  Rng rng(77);
  const Board b = sample_board(cfg, rng);
  PartialBoard partial = PartialBoard::all_hidden(8, 8);
  std::set<std::pair<int, int>> fired;
  for (int shot = 0; shot < 40; ++shot) {
    Coord t{static_cast<int>(rng.below(8)), static_cast<int>(rng.below(8))};
    while (fired.count({t.row, t.col}))
      t = {static_cast<int>(rng.below(8)), static_cast<int>(rng.below(8))};
    fired.insert({t.row, t.col});
    const int hidden_before = partial.hidden_count();
    auto res = reveal(b, partial, t);
    CHECK(res.partial.hidden_count() == hidden_before - 1);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c)
        if (Coord{r, c} != t) CHECK(res.partial.at({r, c}) == partial.at({r, c}));
    partial = res.partial;
  }
  CHECK(partial.hidden_count() == 24);  // 64 - 40 distinct reveals
}

TEST_CASE("codec round-trips and uses the symbol table", "[board]") {
  CHECK(serialize_board(Board::from_cells(2, 2, {0, 0, 0, 0})) == "0 0\n0 0");

  auto partial = PartialBoard::all_hidden(2, 2).with_revealed({0, 1}, kWater);
  CHECK(serialize_partial(partial) == "-1 0\n-1 -1");

  BoardConfig cfg;
  Rng rng(55);
  for (int i = 0; i < 1000; ++i) {
    const Board b = sample_board(cfg, rng);
    CHECK(parse_board(serialize_board(b)) == b);
  }

  // Hidden at A1 serializes as -1.
  auto p = PartialBoard::all_hidden(2, 2);
  CHECK(serialize_partial(p).substr(0, 2) == "-1");
  CHECK(parse_partial(serialize_partial(p)) == p);

  CHECK_THROWS_AS(parse_board("0 x\n0 0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_board("0 0 0\n0 0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_board("0 7\n0 0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_board("0 -1\n0 0"), std::invalid_argument);  // hidden not valid in a truth grid
}

TEST_CASE("coordinates parse and print in A1 style", "[board]") {
  auto c = parse_coord("E7", 8, 8);
  REQUIRE(c.has_value());
  CHECK(c->row == 4);
  CHECK(c->col == 6);
  CHECK(c->to_string() == "E7");
  CHECK(parse_coord("e7", 8, 8).has_value());
  CHECK_FALSE(parse_coord("Z9", 8, 8).has_value());
  CHECK_FALSE(parse_coord("5E", 8, 8).has_value());
  CHECK_FALSE(parse_coord("E0", 8, 8).has_value());
}

TEST_CASE("config inference from a bare grid", "[board]") {
  BoardConfig cfg;
  Rng rng(66);
  const Board b = sample_board(cfg, rng);
  const BoardConfig inferred = infer_config(b);
  CHECK(inferred.rows == 8);
  CHECK(inferred.ships.size() == 4);
  CHECK(inferred.total_ship_cells() == 14);
}
