#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "battleship/rng.hpp"

namespace battleship {

// Cell symbol table (also the wire format): -1 hidden, 0 water, 1..4 ship colors.
using CellValue = std::int8_t;
inline constexpr CellValue kHidden = -1;
inline constexpr CellValue kWater = 0;

enum class ShipColor : std::int8_t { Red = 1, Green = 2, Purple = 3, Orange = 4 };

inline constexpr std::array<ShipColor, 4> kAllColors = {ShipColor::Red, ShipColor::Green,
                                                        ShipColor::Purple, ShipColor::Orange};

inline std::string_view color_name(ShipColor c) {
  switch (c) {
    case ShipColor::Red: return "red";
    case ShipColor::Green: return "green";
    case ShipColor::Purple: return "purple";
    case ShipColor::Orange: return "orange";
  }
  return "?";
}

inline std::optional<ShipColor> color_from_name(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (ShipColor c : kAllColors)
    if (lower == color_name(c)) return c;
  return std::nullopt;
}

// Thrown when a generative operation runs out of attempts: "infeasible config"
// from the prior sampler's guard, "depleted" from consistent sampling / belief
// updates with no surviving mass.
class DepletedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 0-indexed internally; the text form uses the A1 style (row letter, 1-based column).
struct Coord {
  int row = 0;
  int col = 0;

  friend bool operator==(const Coord&, const Coord&) = default;
  friend auto operator<=>(const Coord&, const Coord&) = default;  // row-major order

  std::string to_string() const {
    if (row < 0 || row >= 26) throw std::invalid_argument("coordinate row out of letter range");
    return std::string(1, static_cast<char>('A' + row)) + std::to_string(col + 1);
  }
};

inline std::optional<Coord> parse_coord(std::string_view text, int rows, int cols) {
  if (text.size() < 2) return std::nullopt;
  const char r = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  if (r < 'A' || r > 'Z') return std::nullopt;
  int col = 0;
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') return std::nullopt;
    col = col * 10 + (text[i] - '0');
  }
  if (col < 1) return std::nullopt;
  Coord c{r - 'A', col - 1};
  if (c.row >= rows || c.col >= cols) return std::nullopt;
  return c;
}

struct ShipSpec {
  ShipColor color;
  int length;

  friend bool operator==(const ShipSpec&, const ShipSpec&) = default;
};

struct BoardConfig {
  int rows = 8;
  int cols = 8;
  std::vector<ShipSpec> ships = {{ShipColor::Red, 2},
                                 {ShipColor::Green, 3},
                                 {ShipColor::Purple, 4},
                                 {ShipColor::Orange, 5}};
  bool allow_touching = true;
  int question_budget = 15;
  int move_budget = 40;

  int total_ship_cells() const {
    int n = 0;
    for (const auto& s : ships) n += s.length;
    return n;
  }

  const ShipSpec* find_ship(ShipColor c) const {
    for (const auto& s : ships)
      if (s.color == c) return &s;
    return nullptr;
  }

  void validate() const {
    if (rows < 1 || cols < 1) throw std::invalid_argument("board dimensions must be positive");
    if (rows > 26) throw std::invalid_argument("text formats support at most 26 rows (A..Z)");
    if (question_budget < 0 || move_budget < 0) throw std::invalid_argument("budgets must be >= 0");
    if (ships.empty()) throw std::invalid_argument("config needs at least one ship");
    int cells = 0;
    for (std::size_t i = 0; i < ships.size(); ++i) {
      if (ships[i].length < 2) throw std::invalid_argument("every ship length must be >= 2");
      cells += ships[i].length;
      for (std::size_t j = i + 1; j < ships.size(); ++j)
        if (ships[i].color == ships[j].color)
          throw std::invalid_argument("ship colors must be distinct");
    }
    if (cells > rows * cols) throw std::invalid_argument("ships do not fit on the board");
  }

  friend bool operator==(const BoardConfig&, const BoardConfig&) = default;
};

namespace detail {

inline int cell_index(int row, int col, int cols) { return row * cols + col; }

}  // namespace detail

// Fully specified hidden board: water everywhere except ship cells. Per-color
// cell lists are derived at construction so predicate evaluation stays cheap.
class Board {
 public:
  Board() = default;

  static Board from_cells(int rows, int cols, std::vector<CellValue> cells) {
    if (static_cast<int>(cells.size()) != rows * cols)
      throw std::invalid_argument("cell count does not match dimensions");
    Board b;
    b.rows_ = rows;
    b.cols_ = cols;
    b.cells_ = std::move(cells);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const CellValue v = b.cells_[detail::cell_index(r, c, cols)];
        if (v < 1 || v > 4) {
          if (v != kWater) throw std::invalid_argument("board cells must be 0..4");
          continue;
        }
        b.ship_cells_[v - 1].push_back(Coord{r, c});
      }
    return b;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  CellValue at(Coord c) const { return cells_[detail::cell_index(c.row, c.col, cols_)]; }
  bool in_bounds(Coord c) const {
    return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_;
  }

  const std::vector<CellValue>& cells() const { return cells_; }

  // Cells of one ship, in row-major order. Empty when that color is absent.
  const std::vector<Coord>& ship_cells(ShipColor color) const {
    return ship_cells_[static_cast<int>(color) - 1];
  }

  int ship_cell_count() const {
    int n = 0;
    for (const auto& v : ship_cells_) n += static_cast<int>(v.size());
    return n;
  }

  friend bool operator==(const Board& a, const Board& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.cells_ == b.cells_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<CellValue> cells_;
  std::array<std::vector<Coord>, 4> ship_cells_;
};

// The Captain's fog-of-war view: every non-hidden cell mirrors the true board.
class PartialBoard {
 public:
  PartialBoard() = default;

  static PartialBoard all_hidden(int rows, int cols) {
    PartialBoard p;
    p.rows_ = rows;
    p.cols_ = cols;
    p.cells_.assign(static_cast<std::size_t>(rows) * cols, kHidden);
    return p;
  }

  static PartialBoard from_cells(int rows, int cols, std::vector<CellValue> cells) {
    if (static_cast<int>(cells.size()) != rows * cols)
      throw std::invalid_argument("cell count does not match dimensions");
    for (CellValue v : cells)
      if (v < kHidden || v > 4) throw std::invalid_argument("partial cells must be -1..4");
    PartialBoard p;
    p.rows_ = rows;
    p.cols_ = cols;
    p.cells_ = std::move(cells);
    return p;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  CellValue at(Coord c) const { return cells_[detail::cell_index(c.row, c.col, cols_)]; }
  bool is_hidden(Coord c) const { return at(c) == kHidden; }
  bool in_bounds(Coord c) const {
    return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_;
  }

  const std::vector<CellValue>& cells() const { return cells_; }

  int hidden_count() const {
    return static_cast<int>(std::count(cells_.begin(), cells_.end(), kHidden));
  }

  PartialBoard with_revealed(Coord target, CellValue truth) const {
    PartialBoard p = *this;
    p.cells_[detail::cell_index(target.row, target.col, cols_)] = truth;
    return p;
  }

  friend bool operator==(const PartialBoard& a, const PartialBoard& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.cells_ == b.cells_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<CellValue> cells_;
};

inline bool is_consistent(const Board& board, const PartialBoard& partial) {
  if (board.rows() != partial.rows() || board.cols() != partial.cols())
    throw std::invalid_argument("board/partial dimension mismatch");
  const auto& b = board.cells();
  const auto& p = partial.cells();
  for (std::size_t i = 0; i < b.size(); ++i)
    if (p[i] != kHidden && p[i] != b[i]) return false;
  return true;
}

struct RevealResult {
  PartialBoard partial;
  bool hit = false;
  std::optional<ShipColor> sunk;
};

// Reveal the true value of `target`. Sunk status is derived: a ship is sunk
// exactly when all of its cells are non-hidden afterwards.
inline RevealResult reveal(const Board& board, const PartialBoard& partial, Coord target) {
  if (!board.in_bounds(target)) throw std::invalid_argument("reveal target out of bounds");
  if (board.rows() != partial.rows() || board.cols() != partial.cols())
    throw std::invalid_argument("board/partial dimension mismatch");
  RevealResult res;
  const CellValue truth = board.at(target);
  res.partial = partial.with_revealed(target, truth);
  res.hit = truth != kWater;
  if (res.hit) {
    // Sunk exactly when this reveal completes the ship.
    const auto color = static_cast<ShipColor>(truth);
    const bool was_hidden = partial.is_hidden(target);
    bool complete = true;
    for (Coord c : board.ship_cells(color))
      if (res.partial.is_hidden(c)) {
        complete = false;
        break;
      }
    if (complete && was_hidden) res.sunk = color;
  }
  return res;
}

inline bool all_ships_revealed(const Board& board, const PartialBoard& partial) {
  for (ShipColor c : kAllColors)
    for (Coord cell : board.ship_cells(c))
      if (partial.is_hidden(cell)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Placement machinery shared by the prior sampler, the consistent sampler and
// the exhaustive enumerator.

struct Placement {
  Coord origin;
  bool horizontal = true;
  int length = 0;

  Coord cell(int i) const {
    return horizontal ? Coord{origin.row, origin.col + i} : Coord{origin.row + i, origin.col};
  }
};

namespace detail {

// Board-shaped bitmask. One word covers the default 8x8; larger boards spill
// into more words.
struct CellMask {
  std::vector<std::uint64_t> words;

  explicit CellMask(int cell_count) : words((cell_count + 63) / 64, 0) {}
  void set(int idx) { words[idx >> 6] |= (1ULL << (idx & 63)); }
  bool intersects(const CellMask& other) const {
    for (std::size_t i = 0; i < words.size(); ++i)
      if (words[i] & other.words[i]) return true;
    return false;
  }
  void merge(const CellMask& other) {
    for (std::size_t i = 0; i < words.size(); ++i) words[i] |= other.words[i];
  }
  void clear() { std::fill(words.begin(), words.end(), 0); }
};

struct MaskedPlacement {
  Placement placement;
  CellMask cells;
  CellMask dilated;  // cells plus edge-adjacent neighbors, for the no-touch rule
};

inline MaskedPlacement make_masked(const Placement& p, int rows, int cols) {
  MaskedPlacement mp{p, CellMask(rows * cols), CellMask(rows * cols)};
  for (int i = 0; i < p.length; ++i) {
    const Coord c = p.cell(i);
    mp.cells.set(cell_index(c.row, c.col, cols));
    static constexpr int dr[] = {0, 0, 0, 1, -1};
    static constexpr int dc[] = {0, 1, -1, 0, 0};
    for (int d = 0; d < 5; ++d) {
      const int r2 = c.row + dr[d], c2 = c.col + dc[d];
      if (r2 >= 0 && r2 < rows && c2 >= 0 && c2 < cols)
        mp.dilated.set(cell_index(r2, c2, cols));
    }
  }
  return mp;
}

inline std::vector<Placement> all_placements(int rows, int cols, int length) {
  std::vector<Placement> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + length <= cols; ++c) out.push_back({{r, c}, true, length});
  for (int r = 0; r + length <= rows; ++r)
    for (int c = 0; c < cols; ++c) out.push_back({{r, c}, false, length});
  return out;
}

// Placements of `color` compatible with the revealed evidence: the placement
// must cover every revealed cell of this color and may not cover a revealed
// cell of any other value.
inline bool placement_consistent(const Placement& p, ShipColor color, const PartialBoard& partial) {
  const auto v = static_cast<CellValue>(color);
  int covered_own = 0;
  for (int i = 0; i < p.length; ++i) {
    const CellValue cell = partial.at(p.cell(i));
    if (cell == v) {
      ++covered_own;
    } else if (cell != kHidden) {
      return false;
    }
  }
  int revealed_own = 0;
  for (int r = 0; r < partial.rows(); ++r)
    for (int c = 0; c < partial.cols(); ++c)
      if (partial.at({r, c}) == v) ++revealed_own;
  return covered_own == revealed_own;
}

inline Board board_from_placements(const BoardConfig& config,
                                   const std::vector<Placement>& placements) {
  std::vector<CellValue> cells(static_cast<std::size_t>(config.rows) * config.cols, kWater);
  for (std::size_t s = 0; s < placements.size(); ++s) {
    const auto v = static_cast<CellValue>(config.ships[s].color);
    for (int i = 0; i < placements[s].length; ++i) {
      const Coord c = placements[s].cell(i);
      cells[cell_index(c.row, c.col, config.cols)] = v;
    }
  }
  return Board::from_cells(config.rows, config.cols, std::move(cells));
}

// Draws each ship's placement uniformly from a precomputed candidate list and
// rejects jointly on overlap (and touching, when forbidden). Rejection from an
// independent uniform proposal keeps the accepted joint exactly uniform over
// the feasible subset.
class PlacementSampler {
 public:
  PlacementSampler(const BoardConfig& config, const PartialBoard* partial)
      : config_(config), scratch_(config.rows * config.cols) {
    config.validate();
    per_ship_.reserve(config.ships.size());
    for (const auto& ship : config.ships) {
      std::vector<MaskedPlacement> list;
      for (const Placement& p : all_placements(config.rows, config.cols, ship.length)) {
        if (partial != nullptr && !placement_consistent(p, ship.color, *partial)) continue;
        list.push_back(make_masked(p, config.rows, config.cols));
      }
      per_ship_.push_back(std::move(list));
    }
  }

  bool feasible_per_ship() const {
    for (const auto& list : per_ship_)
      if (list.empty()) return false;
    return true;
  }

  std::optional<Board> try_sample(Rng& rng, long max_tries) {
    if (!feasible_per_ship()) return std::nullopt;
    std::vector<const MaskedPlacement*> chosen(per_ship_.size());
    for (long attempt = 0; attempt < max_tries; ++attempt) {
      bool ok = true;
      scratch_.clear();
      for (std::size_t s = 0; s < per_ship_.size() && ok; ++s) {
        const auto& list = per_ship_[s];
        chosen[s] = &list[rng.index(list.size())];
        const auto& mask = config_.allow_touching ? chosen[s]->cells : chosen[s]->dilated;
        if (scratch_.intersects(chosen[s]->cells)) ok = false;
        if (ok) {
          // For the no-touch rule each ship's dilation must avoid the others'
          // cells; merging dilated masks makes the check symmetric.
          scratch_.merge(mask);
        }
      }
      if (!ok) continue;
      std::vector<Placement> placements;
      placements.reserve(chosen.size());
      for (const auto* mp : chosen) placements.push_back(mp->placement);
      return board_from_placements(config_, placements);
    }
    return std::nullopt;
  }

 private:
  BoardConfig config_;
  std::vector<std::vector<MaskedPlacement>> per_ship_;
  CellMask scratch_;
};

}  // namespace detail

inline constexpr long kSampleBoardMaxTries = 1'000'000;
inline constexpr long kConsistentMaxTries = 100'000;

// Exactly uniform over the feasible configuration set (independent uniform
// per-ship proposal, joint rejection).
inline Board sample_board(const BoardConfig& config, Rng& rng) {
  detail::PlacementSampler sampler(config, nullptr);
  if (auto b = sampler.try_sample(rng, kSampleBoardMaxTries)) return *b;
  throw InfeasibleConfigError("infeasible config: no valid joint placement found");
}

// Uniform over boards consistent with `partial`.
inline Board sample_board_consistent(const BoardConfig& config, const PartialBoard& partial,
                                     Rng& rng, long max_tries = kConsistentMaxTries) {
  detail::PlacementSampler sampler(config, &partial);
  if (auto b = sampler.try_sample(rng, max_tries)) return *b;
  throw DepletedError("depleted: no board consistent with the partial view");
}

// Batched variant reusing one placement table; used by belief init and
// rejuvenation where thousands of draws share the same partial.
inline std::vector<Board> sample_boards_consistent(const BoardConfig& config,
                                                   const PartialBoard& partial, int count, Rng& rng,
                                                   long max_tries = kConsistentMaxTries) {
  detail::PlacementSampler sampler(config, &partial);
  std::vector<Board> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto b = sampler.try_sample(rng, max_tries);
    if (!b) throw DepletedError("depleted: no board consistent with the partial view");
    out.push_back(std::move(*b));
  }
  return out;
}

// True board validity against a config: contiguous, collinear, correct length,
// no overlap (overlap is impossible once per-cell colors are single-valued,
// so this checks shape and, optionally, the touching rule).
inline bool board_valid(const Board& board, const BoardConfig& config) {
  if (board.rows() != config.rows || board.cols() != config.cols) return false;
  int total = 0;
  for (const auto& ship : config.ships) {
    const auto& cells = board.ship_cells(ship.color);
    if (static_cast<int>(cells.size()) != ship.length) return false;
    total += ship.length;
    bool same_row = true, same_col = true;
    for (const Coord& c : cells) {
      same_row = same_row && c.row == cells[0].row;
      same_col = same_col && c.col == cells[0].col;
    }
    if (!same_row && !same_col) return false;
    // row-major cell order makes contiguity a neighbor check
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const int dr = cells[i].row - cells[i - 1].row;
      const int dc = cells[i].col - cells[i - 1].col;
      if (same_row && !(dr == 0 && dc == 1)) return false;
      if (!same_row && !(dr == 1 && dc == 0)) return false;
    }
  }
  if (total != board.ship_cell_count()) return false;  // stray colors not in config
  if (!config.allow_touching) {
    for (std::size_t i = 0; i < config.ships.size(); ++i)
      for (std::size_t j = i + 1; j < config.ships.size(); ++j)
        for (const Coord& a : board.ship_cells(config.ships[i].color))
          for (const Coord& b : board.ship_cells(config.ships[j].color))
            if (std::abs(a.row - b.row) + std::abs(a.col - b.col) == 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Text codec: row-major, whitespace-separated symbols, one line per row.

namespace detail {

inline std::string serialize_cells(int rows, int cols, const std::vector<CellValue>& cells) {
  std::string out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c > 0) out += ' ';
      out += std::to_string(static_cast<int>(cells[cell_index(r, c, cols)]));
    }
    if (r + 1 < rows) out += '\n';
  }
  return out;
}

inline std::vector<std::vector<CellValue>> parse_rows(std::string_view text, CellValue min_value) {
  std::vector<std::vector<CellValue>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<CellValue> row;
    std::string tok;
    while (ls >> tok) {
      int v = 0;
      try {
        std::size_t used = 0;
        v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw std::invalid_argument("unknown symbol '" + tok + "' in grid text");
      }
      if (v < min_value || v > 4)
        throw std::invalid_argument("unknown symbol '" + tok + "' in grid text");
      row.push_back(static_cast<CellValue>(v));
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("empty grid text");
  for (const auto& row : rows)
    if (row.size() != rows[0].size()) throw std::invalid_argument("ragged rows in grid text");
  return rows;
}

inline std::vector<CellValue> flatten(const std::vector<std::vector<CellValue>>& rows) {
  std::vector<CellValue> cells;
  cells.reserve(rows.size() * rows[0].size());
  for (const auto& row : rows) cells.insert(cells.end(), row.begin(), row.end());
  return cells;
}

}  // namespace detail

inline std::string serialize_board(const Board& b) {
  return detail::serialize_cells(b.rows(), b.cols(), b.cells());
}

inline std::string serialize_partial(const PartialBoard& p) {
  return detail::serialize_cells(p.rows(), p.cols(), p.cells());
}

inline Board parse_board(std::string_view text) {
  auto rows = detail::parse_rows(text, kWater);
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows[0].size());
  return Board::from_cells(r, c, detail::flatten(rows));
}

inline PartialBoard parse_partial(std::string_view text) {
  auto rows = detail::parse_rows(text, kHidden);
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows[0].size());
  return PartialBoard::from_cells(r, c, detail::flatten(rows));
}

// Recover a config from a bare board grid (used for .board files): ship list
// from the colors present, defaults elsewhere.
inline BoardConfig infer_config(const Board& board) {
  BoardConfig cfg;
  cfg.rows = board.rows();
  cfg.cols = board.cols();
  cfg.ships.clear();
  for (ShipColor c : kAllColors) {
    const auto& cells = board.ship_cells(c);
    if (!cells.empty()) cfg.ships.push_back({c, static_cast<int>(cells.size())});
  }
  cfg.validate();
  if (!board_valid(board, cfg)) throw std::invalid_argument("grid does not form valid ships");
  return cfg;
}

}  // namespace battleship
