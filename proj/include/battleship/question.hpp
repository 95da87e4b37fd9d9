#pragma once

#include <algorithm>
#include <cctype>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "battleship/board.hpp"

namespace battleship {

// Comparison operators for counting atoms.
enum class Cmp : std::int8_t { Eq, Lt, Gt, Le, Ge };

inline std::string_view cmp_name(Cmp c) {
  switch (c) {
    case Cmp::Eq: return "=";
    case Cmp::Lt: return "<";
    case Cmp::Gt: return ">";
    case Cmp::Le: return "<=";
    case Cmp::Ge: return ">=";
  }
  return "?";
}

inline bool cmp_apply(Cmp c, int lhs, int rhs) {
  switch (c) {
    case Cmp::Eq: return lhs == rhs;
    case Cmp::Lt: return lhs < rhs;
    case Cmp::Gt: return lhs > rhs;
    case Cmp::Le: return lhs <= rhs;
    case Cmp::Ge: return lhs >= rhs;
  }
  return false;
}

// A rectangular/linear/explicit cell region. Row and column regions are kept
// symbolic so they serialize back to their original form.
struct Region {
  enum class Kind : std::int8_t { Rect, Row, Col, Tiles } kind = Kind::Rect;
  Coord a{};       // Rect: top-left; Row/Col: unused beyond index
  Coord b{};       // Rect: bottom-right (inclusive)
  int index = 0;   // Row or Col index
  std::vector<Coord> tiles;

  static Region rect(Coord a, Coord b) {
    Region r;
    r.kind = Kind::Rect;
    r.a = {std::min(a.row, b.row), std::min(a.col, b.col)};
    r.b = {std::max(a.row, b.row), std::max(a.col, b.col)};
    return r;
  }
  static Region row(int r) {
    Region g;
    g.kind = Kind::Row;
    g.index = r;
    return g;
  }
  static Region col(int c) {
    Region g;
    g.kind = Kind::Col;
    g.index = c;
    return g;
  }
  static Region cells(std::vector<Coord> tiles) {
    Region g;
    g.kind = Kind::Tiles;
    g.tiles = std::move(tiles);
    return g;
  }

  template <typename F>
  bool any_cell(int rows, int cols, F&& pred) const {
    switch (kind) {
      case Kind::Rect:
        for (int r = a.row; r <= b.row; ++r)
          for (int c = a.col; c <= b.col; ++c)
            if (pred(Coord{r, c})) return true;
        return false;
      case Kind::Row:
        for (int c = 0; c < cols; ++c)
          if (pred(Coord{index, c})) return true;
        return false;
      case Kind::Col:
        for (int r = 0; r < rows; ++r)
          if (pred(Coord{r, index})) return true;
        return false;
      case Kind::Tiles:
        for (const Coord& c : tiles)
          if (pred(c)) return true;
        return false;
    }
    return false;
  }

  bool in_bounds(int rows, int cols) const {
    switch (kind) {
      case Kind::Rect:
        return a.row >= 0 && a.col >= 0 && b.row < rows && b.col < cols;
      case Kind::Row: return index >= 0 && index < rows;
      case Kind::Col: return index >= 0 && index < cols;
      case Kind::Tiles:
        return !tiles.empty() &&
               std::all_of(tiles.begin(), tiles.end(), [&](const Coord& c) {
                 return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols;
               });
    }
    return false;
  }
};

namespace detail {

struct QuestionNode;
using NodePtr = std::shared_ptr<const QuestionNode>;

struct QuestionNode {
  enum class Kind : std::int8_t {
    TileIsShip,
    TileIsColor,
    AnyShipIn,
    CountShipTilesIn,
    ShipLength,
    ShipHorizontal,
    ShipsTouching,
    AnyUnrevealedShipIn,
    ShipSunk,
    Not,
    And,
    Or,
  } kind;

  Coord coord{};
  ShipColor color = ShipColor::Red;
  ShipColor color2 = ShipColor::Red;
  Region region;
  Cmp cmp = Cmp::Eq;
  int value = 0;
  std::vector<NodePtr> children;
};

}  // namespace detail

// Executable yes/no question: a total, deterministic predicate over
// (hypothesis board, current partial view). Stateless atoms ignore the
// partial; AnyUnrevealedShipIn and ShipSunk consult it.
class Question {
 public:
  Question() = default;

  static Question tile_is_ship(Coord c) {
    auto n = make(detail::QuestionNode::Kind::TileIsShip);
    n->coord = c;
    return Question(std::move(n));
  }
  static Question tile_is_color(Coord c, ShipColor color) {
    auto n = make(detail::QuestionNode::Kind::TileIsColor);
    n->coord = c;
    n->color = color;
    return Question(std::move(n));
  }
  static Question any_ship(Region r) {
    auto n = make(detail::QuestionNode::Kind::AnyShipIn);
    n->region = std::move(r);
    return Question(std::move(n));
  }
  static Question count_ship(Region r, Cmp cmp, int k) {
    auto n = make(detail::QuestionNode::Kind::CountShipTilesIn);
    n->region = std::move(r);
    n->cmp = cmp;
    n->value = k;
    return Question(std::move(n));
  }
  static Question ship_len(ShipColor color, Cmp cmp, int k) {
    auto n = make(detail::QuestionNode::Kind::ShipLength);
    n->color = color;
    n->cmp = cmp;
    n->value = k;
    return Question(std::move(n));
  }
  static Question ship_horizontal(ShipColor color) {
    auto n = make(detail::QuestionNode::Kind::ShipHorizontal);
    n->color = color;
    return Question(std::move(n));
  }
  static Question ships_touching(ShipColor a, ShipColor b) {
    auto n = make(detail::QuestionNode::Kind::ShipsTouching);
    n->color = a;
    n->color2 = b;
    return Question(std::move(n));
  }
  static Question any_unrevealed_ship(Region r) {
    auto n = make(detail::QuestionNode::Kind::AnyUnrevealedShipIn);
    n->region = std::move(r);
    return Question(std::move(n));
  }
  static Question ship_sunk(ShipColor color) {
    auto n = make(detail::QuestionNode::Kind::ShipSunk);
    n->color = color;
    return Question(std::move(n));
  }
  static Question negation(Question q) {
    auto n = make(detail::QuestionNode::Kind::Not);
    n->children = {q.node_};
    return Question(std::move(n));
  }
  static Question conjunction(std::vector<Question> qs) {
    return combine(detail::QuestionNode::Kind::And, std::move(qs));
  }
  static Question disjunction(std::vector<Question> qs) {
    return combine(detail::QuestionNode::Kind::Or, std::move(qs));
  }

  bool valid() const { return node_ != nullptr; }
  const detail::QuestionNode& node() const { return *node_; }

  // Stateful questions consult the partial board; everything else depends on
  // the hypothesis board alone.
  bool depends_on_partial() const { return depends_on_partial(*node_); }

  friend bool operator==(const Question& a, const Question& b);

 private:
  explicit Question(detail::NodePtr n) : node_(std::move(n)) {}

  static std::shared_ptr<detail::QuestionNode> make(detail::QuestionNode::Kind k) {
    auto n = std::make_shared<detail::QuestionNode>();
    n->kind = k;
    return n;
  }

  static Question combine(detail::QuestionNode::Kind kind, std::vector<Question> qs) {
    if (qs.size() < 2) throw std::invalid_argument("and/or need at least two children");
    auto n = make(kind);
    for (auto& q : qs) n->children.push_back(q.node_);
    return Question(std::move(n));
  }

  static bool depends_on_partial(const detail::QuestionNode& n) {
    using K = detail::QuestionNode::Kind;
    if (n.kind == K::AnyUnrevealedShipIn || n.kind == K::ShipSunk) return true;
    for (const auto& c : n.children)
      if (depends_on_partial(*c)) return true;
    return false;
  }

  detail::NodePtr node_;
};

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline bool eval_node(const QuestionNode& n, const Board& board, const PartialBoard& partial) {
  using K = QuestionNode::Kind;
  switch (n.kind) {
    case K::TileIsShip: return board.at(n.coord) != kWater;
    case K::TileIsColor: return board.at(n.coord) == static_cast<CellValue>(n.color);
    case K::AnyShipIn:
      return n.region.any_cell(board.rows(), board.cols(),
                               [&](Coord c) { return board.at(c) != kWater; });
    case K::CountShipTilesIn: {
      int count = 0;
      n.region.any_cell(board.rows(), board.cols(), [&](Coord c) {
        if (board.at(c) != kWater) ++count;
        return false;  // full scan
      });
      return cmp_apply(n.cmp, count, n.value);
    }
    case K::ShipLength:
      return cmp_apply(n.cmp, static_cast<int>(board.ship_cells(n.color).size()), n.value);
    case K::ShipHorizontal: {
      const auto& cells = board.ship_cells(n.color);
      if (cells.size() < 2) return false;
      for (const Coord& c : cells)
        if (c.row != cells[0].row) return false;
      return true;
    }
    case K::ShipsTouching: {
      const auto& a = board.ship_cells(n.color);
      const auto& b = board.ship_cells(n.color2);
      for (const Coord& ca : a)
        for (const Coord& cb : b)
          if (std::abs(ca.row - cb.row) + std::abs(ca.col - cb.col) == 1) return true;
      return false;
    }
    case K::AnyUnrevealedShipIn:
      return n.region.any_cell(board.rows(), board.cols(), [&](Coord c) {
        return board.at(c) != kWater && partial.is_hidden(c);
      });
    case K::ShipSunk: {
      for (const Coord& c : board.ship_cells(n.color))
        if (partial.is_hidden(c)) return false;
      return true;
    }
    case K::Not: return !eval_node(*n.children[0], board, partial);
    case K::And:
      for (const auto& c : n.children)
        if (!eval_node(*c, board, partial)) return false;
      return true;
    case K::Or:
      for (const auto& c : n.children)
        if (eval_node(*c, board, partial)) return true;
      return false;
  }
  return false;
}

}  // namespace detail

inline bool evaluate(const Question& q, const Board& board, const PartialBoard& partial) {
  return detail::eval_node(q.node(), board, partial);
}

// ---------------------------------------------------------------------------
// Canonical serialization: lowercase s-expressions, And/Or children sorted by
// their own serialization so semantically identical ASTs print identically.

namespace detail {

inline std::string serialize_region(const Region& r) {
  switch (r.kind) {
    case Region::Kind::Rect:
      return "(rect " + r.a.to_string() + " " + r.b.to_string() + ")";
    case Region::Kind::Row: return "(row " + std::string(1, static_cast<char>('A' + r.index)) + ")";
    case Region::Kind::Col: return "(col " + std::to_string(r.index + 1) + ")";
    case Region::Kind::Tiles: {
      std::string out = "(tiles";
      for (const Coord& c : r.tiles) out += " " + c.to_string();
      return out + ")";
    }
  }
  return "?";
}

inline std::string serialize_node(const QuestionNode& n) {
  using K = QuestionNode::Kind;
  switch (n.kind) {
    case K::TileIsShip: return "(tile-ship " + n.coord.to_string() + ")";
    case K::TileIsColor:
      return "(tile-color " + n.coord.to_string() + " " + std::string(color_name(n.color)) + ")";
    case K::AnyShipIn: return "(any-ship " + serialize_region(n.region) + ")";
    case K::CountShipTilesIn:
      return "(count-ship " + serialize_region(n.region) + " " + std::string(cmp_name(n.cmp)) +
             " " + std::to_string(n.value) + ")";
    case K::ShipLength:
      return "(ship-len " + std::string(color_name(n.color)) + " " + std::string(cmp_name(n.cmp)) +
             " " + std::to_string(n.value) + ")";
    case K::ShipHorizontal: return "(ship-horizontal " + std::string(color_name(n.color)) + ")";
    case K::ShipsTouching:
      return "(ships-touching " + std::string(color_name(n.color)) + " " +
             std::string(color_name(n.color2)) + ")";
    case K::AnyUnrevealedShipIn:
      return "(any-unrevealed-ship " + serialize_region(n.region) + ")";
    case K::ShipSunk: return "(ship-sunk " + std::string(color_name(n.color)) + ")";
    case K::Not: return "(not " + serialize_node(*n.children[0]) + ")";
    case K::And:
    case K::Or: {
      std::vector<std::string> parts;
      parts.reserve(n.children.size());
      for (const auto& c : n.children) parts.push_back(serialize_node(*c));
      std::sort(parts.begin(), parts.end());
      std::string out = n.kind == K::And ? "(and" : "(or";
      for (const auto& p : parts) out += " " + p;
      return out + ")";
    }
  }
  return "?";
}

}  // namespace detail

inline std::string serialize(const Question& q) { return detail::serialize_node(q.node()); }

inline bool operator==(const Question& a, const Question& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  return serialize(a) == serialize(b);
}

// ---------------------------------------------------------------------------
// Parser (grammar in README). Case-insensitive; reports byte positions.

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string msg, std::size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

namespace detail {

struct Token {
  std::string text;  // lowercased except kept verbatim for error display
  std::size_t pos;
  bool is_paren = false;
};

inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char ch = text[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    if (ch == '(' || ch == ')') {
      out.push_back({std::string(1, ch), i, true});
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
           text[i] != '(' && text[i] != ')')
      ++i;
    std::string tok(text.substr(start, i - start));
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back({std::move(tok), start, false});
  }
  return out;
}

class QuestionParser {
 public:
  QuestionParser(std::string_view text, int rows, int cols)
      : tokens_(tokenize(text)), rows_(rows), cols_(cols) {}

  Question parse() {
    Question q = parse_question();
    if (idx_ != tokens_.size()) fail("unexpected trailing input", peek_pos());
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t pos) { throw ParseError(msg, pos); }

  std::size_t peek_pos() const { return idx_ < tokens_.size() ? tokens_[idx_].pos : end_pos(); }
  std::size_t end_pos() const { return tokens_.empty() ? 0 : tokens_.back().pos + 1; }

  const Token& next(const char* what) {
    if (idx_ >= tokens_.size()) fail(std::string("expected ") + what + ", found end of input",
                                     end_pos());
    return tokens_[idx_++];
  }

  void expect(std::string_view text, const char* what) {
    const Token& t = next(what);
    if (t.text != text) fail(std::string("expected ") + what, t.pos);
  }

  Coord parse_coord_tok() {
    const Token& t = next("coordinate");
    auto c = battleship::parse_coord(t.text, rows_, cols_);
    if (!c) {
      // Distinguish malformed from out-of-bounds for a usable message.
      auto wide = battleship::parse_coord(t.text, 26, 1 << 20);
      if (wide) fail("coordinate out of bounds", t.pos);
      fail("expected coordinate like E7", t.pos);
    }
    return *c;
  }

  ShipColor parse_color() {
    const Token& t = next("color");
    auto c = color_from_name(t.text);
    if (!c) fail("expected color red|green|purple|orange", t.pos);
    return *c;
  }

  Cmp parse_cmp() {
    const Token& t = next("comparison");
    if (t.text == "=") return Cmp::Eq;
    if (t.text == "<") return Cmp::Lt;
    if (t.text == ">") return Cmp::Gt;
    if (t.text == "<=") return Cmp::Le;
    if (t.text == ">=") return Cmp::Ge;
    fail("expected comparison = < > <= >=", t.pos);
  }

  int parse_int() {
    const Token& t = next("integer");
    try {
      std::size_t used = 0;
      int v = std::stoi(t.text, &used);
      if (used != t.text.size()) throw std::invalid_argument(t.text);
      return v;
    } catch (const std::exception&) {
      fail("expected integer", t.pos);
    }
  }

  Region parse_region() {
    expect("(", "region");
    const Token& t = next("region kind");
    Region r;
    if (t.text == "rect") {
      Coord a = parse_coord_tok();
      Coord b = parse_coord_tok();
      r = Region::rect(a, b);
    } else if (t.text == "row") {
      const Token& rt = next("row letter");
      if (rt.text.size() != 1 || rt.text[0] < 'a' || rt.text[0] > 'z')
        fail("expected row letter", rt.pos);
      const int row = rt.text[0] - 'a';
      if (row >= rows_) fail("coordinate out of bounds", rt.pos);
      r = Region::row(row);
    } else if (t.text == "col") {
      const Token& ct = next("column number");
      int col = 0;
      try {
        std::size_t used = 0;
        col = std::stoi(ct.text, &used);
        if (used != ct.text.size()) throw std::invalid_argument(ct.text);
      } catch (const std::exception&) {
        fail("expected column number", ct.pos);
      }
      if (col < 1 || col > cols_) fail("coordinate out of bounds", ct.pos);
      r = Region::col(col - 1);
    } else if (t.text == "tiles") {
      std::vector<Coord> tiles;
      while (idx_ < tokens_.size() && tokens_[idx_].text != ")") tiles.push_back(parse_coord_tok());
      if (tiles.empty()) fail("tiles region needs at least one coordinate", t.pos);
      r = Region::cells(std::move(tiles));
    } else {
      fail("expected region rect|row|col|tiles", t.pos);
    }
    expect(")", "closing paren");
    return r;
  }

  Question parse_question() {
    expect("(", "question");
    const Token& t = next("operator");
    Question q;
    if (t.text == "tile-ship") {
      q = Question::tile_is_ship(parse_coord_tok());
    } else if (t.text == "tile-color") {
      Coord c = parse_coord_tok();
      q = Question::tile_is_color(c, parse_color());
    } else if (t.text == "any-ship") {
      q = Question::any_ship(parse_region());
    } else if (t.text == "count-ship") {
      Region r = parse_region();
      Cmp cmp = parse_cmp();
      q = Question::count_ship(std::move(r), cmp, parse_int());
    } else if (t.text == "ship-len") {
      ShipColor c = parse_color();
      Cmp cmp = parse_cmp();
      q = Question::ship_len(c, cmp, parse_int());
    } else if (t.text == "ship-horizontal") {
      q = Question::ship_horizontal(parse_color());
    } else if (t.text == "ships-touching") {
      ShipColor a = parse_color();
      q = Question::ships_touching(a, parse_color());
    } else if (t.text == "any-unrevealed-ship") {
      q = Question::any_unrevealed_ship(parse_region());
    } else if (t.text == "ship-sunk") {
      q = Question::ship_sunk(parse_color());
    } else if (t.text == "not") {
      q = Question::negation(parse_question());
    } else if (t.text == "and" || t.text == "or") {
      std::vector<Question> children;
      while (idx_ < tokens_.size() && tokens_[idx_].text != ")")
        children.push_back(parse_question());
      if (children.size() < 2) fail("and/or need at least two children", t.pos);
      q = t.text == "and" ? Question::conjunction(std::move(children))
                          : Question::disjunction(std::move(children));
    } else {
      fail("unknown operator '" + t.text + "'", t.pos);
    }
    expect(")", "closing paren");
    return q;
  }

  std::vector<Token> tokens_;
  std::size_t idx_ = 0;
  int rows_;
  int cols_;
};

}  // namespace detail

inline Question parse_question(std::string_view text, int rows, int cols) {
  return detail::QuestionParser(text, rows, cols).parse();
}

inline Question parse_question(std::string_view text, const BoardConfig& config) {
  return parse_question(text, config.rows, config.cols);
}

// ---------------------------------------------------------------------------
// Answer vectors: memoized f_q over a particle set, keyed by particle index.

struct AnswerVector {
  std::vector<std::uint8_t> bits;

  bool constant() const {
    if (bits.empty()) return true;
    return std::all_of(bits.begin(), bits.end(), [&](std::uint8_t b) { return b == bits[0]; });
  }

  friend bool operator==(const AnswerVector&, const AnswerVector&) = default;
};

inline AnswerVector answer_vector(const Question& q, std::span<const Board> particles,
                                  const PartialBoard& partial) {
  if (particles.empty()) throw std::invalid_argument("answer_vector needs at least one particle");
  AnswerVector av;
  av.bits.resize(particles.size());
  for (std::size_t j = 0; j < particles.size(); ++j)
    av.bits[j] = evaluate(q, particles[j], partial) ? 1 : 0;
  return av;
}

// One question with the answer that was observed for it. The partial view at
// ask time is captured alongside: stateful atoms must be replayed against the
// view the answer was actually given under, not whatever is revealed later.
struct QuestionAnswer {
  Question question;
  bool answer = false;
  PartialBoard context;
};
using ReplayLog = std::vector<QuestionAnswer>;

}  // namespace battleship
