#pragma once

#include <string>
#include <vector>

#include "battleship/board.hpp"
#include "battleship/strategy.hpp"

namespace battleship::prompts {

// Numpy-style grid rendering used inside prompts; the symbol table is the
// same -1/0/1-4 encoding as the plain text codec.
inline std::string numpy_grid(int rows, int cols, const std::vector<CellValue>& cells) {
  std::string out = "[";
  for (int r = 0; r < rows; ++r) {
    out += r == 0 ? "[" : " [";
    for (int c = 0; c < cols; ++c) {
      if (c > 0) out += ' ';
      out += std::to_string(static_cast<int>(cells[static_cast<std::size_t>(r) * cols + c]));
    }
    out += "]";
    if (r + 1 < rows) out += "\n";
  }
  return out + "]";
}

inline std::string numpy_grid(const PartialBoard& p) {
  return numpy_grid(p.rows(), p.cols(), p.cells());
}
inline std::string numpy_grid(const Board& b) { return numpy_grid(b.rows(), b.cols(), b.cells()); }

inline std::string capitalized(std::string_view name) {
  std::string s(name);
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// One tracker line per ship; sunk ships also disclose their color.
inline std::string ship_tracker_line(const ShipSpec& ship, bool sunk) {
  if (!sunk) return "A ship of length " + std::to_string(ship.length) + " is not yet sunk.";
  return "A ship of length " + std::to_string(ship.length) + " has been sunk. It was the " +
         capitalized(color_name(ship.color)) + ".";
}

inline bool ship_is_sunk(const ShipSpec& ship, const Board& truth, const PartialBoard& partial) {
  const auto& cells = truth.ship_cells(ship.color);
  if (cells.empty()) return false;
  for (Coord c : cells)
    if (partial.is_hidden(c)) return false;
  return true;
}

inline std::string ship_tracker(const BoardConfig& cfg, const Board& truth,
                                const PartialBoard& partial) {
  std::string out;
  for (const auto& ship : cfg.ships) {
    if (!out.empty()) out += ' ';
    out += ship_tracker_line(ship, ship_is_sunk(ship, truth, partial));
  }
  return out;
}

// Shared system prompt describing the game, the grid addressing scheme and
// the board symbol table.
inline std::string game_setup(const BoardConfig& cfg, const std::string& board_text,
                              const std::string& tracker) {
  std::string rows_list, cols_list, ships_list, lengths_list;
  for (int r = 0; r < cfg.rows; ++r) {
    if (r) rows_list += ", ";
    rows_list += static_cast<char>('A' + r);
  }
  for (int c = 1; c <= cfg.cols; ++c) {
    if (c > 1) cols_list += ", ";
    cols_list += std::to_string(c);
  }
  int min_len = cfg.ships[0].length, max_len = cfg.ships[0].length;
  for (std::size_t i = 0; i < cfg.ships.size(); ++i) {
    const auto& s = cfg.ships[i];
    min_len = std::min(min_len, s.length);
    max_len = std::max(max_len, s.length);
    if (i > 0) ships_list += cfg.ships.size() > 2 ? ", " : " ";
    if (i + 1 == cfg.ships.size() && cfg.ships.size() > 1) ships_list += "and ";
    ships_list += capitalized(color_name(s.color));
    if (i) lengths_list += ", ";
    lengths_list += std::to_string(s.length);
  }

  std::string out =
      "You are playing the board game Battleship. In this variant of the game, pairs of players "
      "collaborate as a team to find the location of ships on the board.\n"
      "Each player is assigned to one of two roles: the 'Captain' or the 'Spotter'.\n"
      "The Captain's role is to decide when and where to reveal tiles on the board. On each turn, "
      "the Captain can ask the Spotter a question about the board, or make a move by guessing a "
      "tile that they think contains a ship.\n"
      "The Spotter's role is to provide the Captain with information about the hidden tiles. The "
      "Spotter has full visibility of the board, but can only answer the Captain's questions with "
      "'Yes' or 'No'.\n\n";
  out += "The board is an " + std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols) +
         " grid, with lettered rows " + rows_list + " and numbered columns " + cols_list + ".\n";
  out +=
      "Coordinates are specified as a row, column pair. For example, C2 is the tile in row C, "
      "column 2.\n";
  out += "There are " + std::to_string(cfg.ships.size()) + " ships on the board: " + ships_list +
         ".\n";
  out += "Ships are oriented either horizontally or vertically and range from " +
         std::to_string(min_len) + " to " + std::to_string(max_len) + " tiles in length.\n\n";
  out +=
      "The board is represented as a numpy array with the following symbols:\n"
      "-1: Hidden\n"
      "0: Water\n"
      "1: Red ship\n"
      "2: Green ship\n"
      "3: Purple ship\n"
      "4: Orange ship\n\n";
  out += board_text + "\n\n";
  out += "The ships on the board are of the following lengths: " + lengths_list + ". " + tracker;
  return out;
}

inline constexpr const char* kTaskDecision =
    "You will be given a partially-revealed game board.\n"
    "Your task is to choose whether you'd like to ask a question about the board to gain more "
    "information, or make a move by guessing a tile that you think contains a ship.\n"
    "Please answer in a single word: 'Question' or 'Move', and enclose your final answer in "
    "<answer></answer> tags, e.g. <answer>Question</answer> or <answer>Move</answer>.";

inline constexpr const char* kTaskMove =
    "You will be given a partially-revealed game board.\n"
    "Your task is to give the coordinates of the hidden tile you think is most likely to contain "
    "a ship tile.\n"
    "Hidden tiles are marked by '-1'.\n"
    "Respond with only the coordinates (e.g., A1, B2, etc.), and enclose your answer in "
    "<answer></answer> tags, e.g. <answer>A1</answer>.";

// The structured-question addendum: questions must be emitted in the
// executable s-expression language so they can be scored and replayed without
// running model-written code.
inline constexpr const char* kDslAddendum =
    "Express your question as a program in the following question language (s-expressions, "
    "case-insensitive):\n"
    "question := atom | (not q) | (and q q+) | (or q q+)\n"
    "atom := (tile-ship COORD) | (tile-color COORD COLOR) | (any-ship REGION) | (count-ship "
    "REGION CMP INT) | (ship-len COLOR CMP INT) | (ship-horizontal COLOR) | (ships-touching "
    "COLOR COLOR) | (any-unrevealed-ship REGION) | (ship-sunk COLOR)\n"
    "REGION := (rect COORD COORD) | (row LETTER) | (col INT) | (tiles COORD+)\n"
    "CMP := = | < | > | <= | >=\n"
    "COORD := a row letter followed by a column number, e.g. E7. COLOR := red|green|purple|orange\n"
    "Examples: (any-ship (row C)) ; (and (ship-horizontal red) (any-unrevealed-ship (rect A1 "
    "D4))) ; (not (ship-sunk green))";

inline std::string task_question() {
  std::string out =
      "You will be given a partially-revealed game board.\n"
      "Your task is to ask a single question that will help you gain the most information "
      "possible about the position of the remaining hidden ships on the board.\n"
      "You can ask any question, but it must be answerable with a Boolean answer (Yes/No).\n";
  out += kDslAddendum;
  out +=
      "\nMake sure to enclose your question in <answer></answer> tags, e.g. "
      "<answer>(any-ship (row C))</answer>.";
  return out;
}

inline std::string task_question_batch(int k) {
  std::string out =
      "You will be given a partially-revealed game board.\n"
      "Your task is to generate " +
      std::to_string(k) +
      " question(s) that will help you gain the most information possible about the position of "
      "the remaining hidden ships on the board. Each question must be answerable with a Boolean "
      "answer (Yes/No).\n";
  out += kDslAddendum;
  out +=
      "\nPlease return your question(s) as a JSON dictionary with numbered keys, wrapped in "
      "<answer></answer> tags like this: <answer>{\"1\": \"(any-ship (row C))\", \"2\": "
      "\"(ship-horizontal red)\"}</answer>\n"
      "IMPORTANT: Use proper JSON format with double quotes around both keys and values.";
  return out;
}

inline constexpr const char* kSpotterDirect =
    "Remember: You can only answer with 'Yes' or 'No'. Please only answer with a single word. "
    "Enclose your answer in <answer></answer> tags, e.g. <answer>Yes</answer> or "
    "<answer>No</answer>.";

inline constexpr const char* kReasoningCot =
    "Please think step-by-step about the task before returning your answer.";

// Rendered prompt bundle for one captain query.
struct PromptContext {
  std::string system;  // game setup
  std::string user;    // board view + role + task + budgets
};

enum class CaptainTask { Decision, Move, Question, QuestionBatch };

inline PromptContext captain_prompt(const BoardConfig& cfg, const Board& truth,
                                    const PartialBoard& partial, Budgets budgets, CaptainTask task,
                                    int k = 10) {
  const std::string tracker = ship_tracker(cfg, truth, partial);
  PromptContext ctx;
  ctx.system = game_setup(cfg, numpy_grid(partial), tracker);
  std::string task_text;
  switch (task) {
    case CaptainTask::Decision: task_text = kTaskDecision; break;
    case CaptainTask::Move: task_text = kTaskMove; break;
    case CaptainTask::Question: task_text = task_question(); break;
    case CaptainTask::QuestionBatch: task_text = task_question_batch(k); break;
  }
  ctx.user = "Here is the current board:\n" + numpy_grid(partial) + "\n\n";
  ctx.user +=
      "You are playing as the Captain. Your objective is to find all the ships on the board as "
      "efficiently as possible.\n\n";
  ctx.user += task_text + "\n\n";
  ctx.user += "You can ask " + std::to_string(budgets.questions_left) +
              " more questions over the course of the game, and can fire " +
              std::to_string(budgets.moves_left) + " more times.\n";
  ctx.user += "Ship Status: " + tracker + "\n\n";
  ctx.user += kReasoningCot;
  return ctx;
}

inline PromptContext spotter_prompt(const BoardConfig& cfg, const Board& truth,
                                    const PartialBoard& partial, const std::string& question_text) {
  const std::string tracker = ship_tracker(cfg, truth, partial);
  PromptContext ctx;
  ctx.system = game_setup(cfg, numpy_grid(partial), tracker);
  ctx.user = "Here is the partial board, which is the view that is visible to the Captain:\n" +
             numpy_grid(partial) + "\n\n";
  ctx.user += "Here is the full board, which only you as Spotter have access to:\n" +
              numpy_grid(truth) + "\n\n";
  ctx.user +=
      "You are playing as the Spotter. Your objective is to answer the Captain's questions as "
      "accurately as possible.\n\n";
  ctx.user += std::string(kSpotterDirect) + "\n\n";
  ctx.user += std::string(kReasoningCot) + "\n\n";
  ctx.user += "Here is the question the Captain asked:\nCaptain (question): " + question_text;
  return ctx;
}

}  // namespace battleship::prompts
