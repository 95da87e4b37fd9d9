#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "battleship/engine.hpp"
#include "battleship/prompts.hpp"
#include "battleship/guesswho.hpp"

namespace battleship::llm {

using json = nlohmann::json;

class AdapterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Chat-completions endpoint description. The key is read from the named
// environment variable at call time and never stored or logged.
struct EndpointConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_seconds = 60.0;
  int max_retries = 3;
  std::optional<double> temperature;  // passed through unmodified when set

  bool configured() const { return !base_url.empty() && !model.empty(); }
};

struct ChatMessage {
  std::string role;
  std::string content;
};

// Shared requests-per-second limiter; one instance is typically shared by
// every adapter session in the process.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second = 4.0)
      : min_interval_(requests_per_second > 0 ? 1.0 / requests_per_second : 0.0) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto earliest =
        last_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(min_interval_));
    if (now < earliest) {
      const auto wait = earliest - now;
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
    last_ = std::chrono::steady_clock::now();
  }

  static std::shared_ptr<RateLimiter> global() {
    static auto limiter = std::make_shared<RateLimiter>();
    return limiter;
  }

 private:
  std::mutex mu_;
  std::chrono::steady_clock::time_point last_{};
  double min_interval_;
};

// Transport abstraction so adapter tests run offline against cassettes.
class Transport {
 public:
  virtual ~Transport() = default;
  // Takes the chat-completions request body, returns the raw response body.
  virtual std::string post_chat(const json& request) = 0;
};

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos)
      throw AdapterError("base_url must include a scheme, e.g. http://host:port/v1");
    const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      host_ = cfg_.base_url;
    } else {
      host_ = cfg_.base_url.substr(0, path_start);
      path_prefix_ = cfg_.base_url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
  }

  std::string post_chat(const json& request) override {
    httplib::Client client(host_);
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<long>(cfg_.timeout_seconds * 1000)));
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<long>(cfg_.timeout_seconds * 1000)));
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
    auto res = client.Post(path_prefix_ + "/chat/completions", headers, request.dump(),
                           "application/json");
    if (!res) throw AdapterError("chat endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw AdapterError("chat endpoint returned HTTP " + std::to_string(res->status));
    return res->body;
  }

 private:
  EndpointConfig cfg_;
  std::string host_;
  std::string path_prefix_;
};

// Replays recorded request/response pairs. Entries are consumed in order
// among those matching the request, so retry sequences replay faithfully.
class CassetteTransport : public Transport {
 public:
  explicit CassetteTransport(json entries)
      : entries_(std::move(entries)), mu_(std::make_unique<std::mutex>()) {
    if (!entries_.is_array()) throw AdapterError("cassette must be a JSON array");
    used_.assign(entries_.size(), false);
  }

  static CassetteTransport from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AdapterError("cannot open cassette file " + path);
    json j;
    in >> j;
    return CassetteTransport(std::move(j));
  }

  std::string post_chat(const json& request) override {
    std::lock_guard<std::mutex> lock(*mu_);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (used_[i]) continue;
      if (entries_[i].at("request") == request) {
        used_[i] = true;
        const json& resp = entries_[i].at("response");
        return resp.is_string() ? resp.get<std::string>() : resp.dump();
      }
    }
    throw AdapterError("no unused cassette entry matches the request");
  }

 private:
  json entries_;
  std::vector<bool> used_;
  std::unique_ptr<std::mutex> mu_;
};

// Wraps a live transport and appends every exchange to a cassette file.
class RecordingTransport : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, std::string path)
      : inner_(std::move(inner)), path_(std::move(path)) {}

  std::string post_chat(const json& request) override {
    const std::string body = inner_->post_chat(request);
    std::lock_guard<std::mutex> lock(mu_);
    entries_.push_back({{"request", request}, {"response", body}});
    std::ofstream out(path_);
    out << entries_.dump(2) << '\n';
    return body;
  }

 private:
  std::shared_ptr<Transport> inner_;
  std::string path_;
  json entries_ = json::array();
  std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Completion client and answer parsing

class LmClient {
 public:
  LmClient(EndpointConfig cfg, std::shared_ptr<Transport> transport,
           std::shared_ptr<RateLimiter> limiter = RateLimiter::global())
      : cfg_(std::move(cfg)), transport_(std::move(transport)), limiter_(std::move(limiter)) {}

  const EndpointConfig& config() const { return cfg_; }

  // One completion; transport errors are retried up to max_retries.
  std::string complete(const std::vector<ChatMessage>& messages) {
    json request{{"model", cfg_.model}, {"messages", json::array()}};
    for (const ChatMessage& m : messages)
      request["messages"].push_back({{"role", m.role}, {"content", m.content}});
    if (cfg_.temperature) request["temperature"] = *cfg_.temperature;

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      try {
        if (limiter_) limiter_->acquire();
        const std::string body = transport_->post_chat(request);
        const json parsed = json::parse(body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const std::exception& e) {
        last_error = e.what();
      }
    }
    throw AdapterError("completion failed after retries: " + last_error);
  }

 private:
  EndpointConfig cfg_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<RateLimiter> limiter_;
};

// Last <answer>...</answer> span, case-insensitive; chain-of-thought text
// before it is permitted and ignored.
inline std::optional<std::string> extract_answer(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const std::string open = "<answer>", close = "</answer>";
  std::size_t best = std::string::npos;
  std::size_t pos = 0;
  while ((pos = lower.find(open, pos)) != std::string::npos) {
    best = pos;
    pos += open.size();
  }
  if (best == std::string::npos) return std::nullopt;
  const std::size_t start = best + open.size();
  const std::size_t end = lower.find(close, start);
  if (end == std::string::npos) return std::nullopt;
  std::string inner = text.substr(start, end - start);
  // trim
  const auto a = inner.find_first_not_of(" \t\r\n");
  const auto b = inner.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return std::string();
  return inner.substr(a, b - a + 1);
}

inline std::optional<bool> parse_yes_no(const std::string& answer) {
  std::string s = answer;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "yes") return true;
  if (s == "no") return false;
  return std::nullopt;
}

// 'Question' or 'Move', case-insensitive. True means ask.
inline std::optional<bool> parse_decision_word(const std::string& answer) {
  std::string s = answer;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "question") return true;
  if (s == "move") return false;
  return std::nullopt;
}

// Numbered-key JSON mapping of DSL strings; unparseable entries are dropped,
// duplicates (by canonical serialization) deduplicated.
inline std::vector<Question> parse_question_batch(const std::string& answer,
                                                  const BoardConfig& cfg,
                                                  std::vector<std::string>* warnings = nullptr) {
  std::vector<Question> out;
  json mapping;
  try {
    mapping = json::parse(answer);
  } catch (const std::exception& e) {
    if (warnings) warnings->push_back(std::string("batch is not valid JSON: ") + e.what());
    return out;
  }
  if (!mapping.is_object()) {
    if (warnings) warnings->push_back("batch is not a JSON object");
    return out;
  }
  std::vector<std::string> seen;
  for (const auto& [key, value] : mapping.items()) {
    if (!value.is_string()) {
      if (warnings) warnings->push_back("entry " + key + " is not a string");
      continue;
    }
    try {
      Question q = parse_question(value.get<std::string>(), cfg);
      std::string canonical = serialize(q);
      if (std::find(seen.begin(), seen.end(), canonical) != seen.end()) continue;
      seen.push_back(std::move(canonical));
      out.push_back(std::move(q));
    } catch (const std::exception& e) {
      if (warnings) warnings->push_back("entry " + key + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adapter operations

enum class CaptainActKind { Decision, Move, Question };

struct CaptainAct {
  std::optional<bool> wants_question;  // Decision
  std::optional<Coord> move;           // Move
  std::optional<Question> question;    // Question
};

// One captain query with parse-retry: on unparseable output the model is
// re-queried up to max_retries times, then the call errors.
inline CaptainAct llm_captain_act(LmClient& client, const prompts::PromptContext& ctx,
                                  CaptainActKind kind, const BoardConfig& cfg) {
  std::string last_error = "unparseable completion";
  for (int attempt = 0; attempt <= client.config().max_retries; ++attempt) {
    const std::string completion =
        client.complete({{"system", ctx.system}, {"user", ctx.user}});
    const auto answer = extract_answer(completion);
    if (!answer) {
      last_error = "no <answer> tags in completion";
      continue;
    }
    CaptainAct act;
    switch (kind) {
      case CaptainActKind::Decision:
        if (auto d = parse_decision_word(*answer)) {
          act.wants_question = d;
          return act;
        }
        last_error = "decision answer was neither 'Question' nor 'Move'";
        break;
      case CaptainActKind::Move:
        if (auto c = parse_coord(*answer, cfg.rows, cfg.cols)) {
          act.move = c;
          return act;
        }
        last_error = "move answer was not an in-bounds coordinate";
        break;
      case CaptainActKind::Question:
        try {
          act.question = parse_question(*answer, cfg);
          return act;
        } catch (const std::exception& e) {
          last_error = e.what();
        }
        break;
    }
  }
  throw AdapterError("captain act failed: " + last_error);
}

inline std::vector<Question> llm_generate_question_batch(LmClient& client,
                                                         const prompts::PromptContext& ctx, int k,
                                                         const BoardConfig& cfg,
                                                         std::vector<std::string>* warnings =
                                                             nullptr) {
  if (k < 1) throw std::invalid_argument("batch size must be >= 1");
  std::string last_error = "no parseable questions";
  for (int attempt = 0; attempt <= client.config().max_retries; ++attempt) {
    const std::string completion =
        client.complete({{"system", ctx.system}, {"user", ctx.user}});
    const auto answer = extract_answer(completion);
    if (!answer) {
      last_error = "no <answer> tags in completion";
      continue;
    }
    auto questions = parse_question_batch(*answer, cfg, warnings);
    if (!questions.empty()) return questions;
    last_error = "zero parseable questions in batch";
  }
  throw AdapterError("question batch failed: " + last_error);
}

inline bool llm_spotter_answer(LmClient& client, const prompts::PromptContext& ctx) {
  std::string last_error = "unparseable completion";
  for (int attempt = 0; attempt <= client.config().max_retries; ++attempt) {
    const std::string completion =
        client.complete({{"system", ctx.system}, {"user", ctx.user}});
    const auto answer = extract_answer(completion);
    if (!answer) {
      last_error = "no <answer> tags in completion";
      continue;
    }
    if (auto yn = parse_yes_no(*answer)) return *yn;
    last_error = "spotter answer was neither Yes nor No";
  }
  throw AdapterError("spotter answer failed: " + last_error);
}

// ---------------------------------------------------------------------------
// Glue into the engine

// Per-turn captain hooks backed by the adapter. Failures surface as nullopt
// so the strategy layer degrades to Bayes rules with recorded fallbacks.
inline std::function<LmHooks(const GameView&)> make_lm_provider(std::shared_ptr<LmClient> client) {
  return [client](const GameView& view) {
    LmHooks hooks;
    // Copies: the hooks may outlive this frame within the turn.
    const BoardConfig cfg = view.config;
    const Board truth = view.truth;
    const PartialBoard partial = view.partial;
    const Budgets budgets = view.budgets;
    hooks.wants_question = [client, cfg, truth, partial, budgets]() -> std::optional<bool> {
      try {
        auto ctx = prompts::captain_prompt(cfg, truth, partial, budgets,
                                           prompts::CaptainTask::Decision);
        return llm_captain_act(*client, ctx, CaptainActKind::Decision, cfg).wants_question;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    hooks.question = [client, cfg, truth, partial, budgets]() -> std::optional<Question> {
      try {
        auto ctx = prompts::captain_prompt(cfg, truth, partial, budgets,
                                           prompts::CaptainTask::Question);
        return llm_captain_act(*client, ctx, CaptainActKind::Question, cfg).question;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    hooks.question_batch = [client, cfg, truth, partial,
                            budgets](int k) -> std::optional<std::vector<Question>> {
      try {
        auto ctx = prompts::captain_prompt(cfg, truth, partial, budgets,
                                           prompts::CaptainTask::QuestionBatch, k);
        return llm_generate_question_batch(*client, ctx, k, cfg);
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    hooks.move = [client, cfg, truth, partial, budgets]() -> std::optional<Coord> {
      try {
        auto ctx =
            prompts::captain_prompt(cfg, truth, partial, budgets, prompts::CaptainTask::Move);
        return llm_captain_act(*client, ctx, CaptainActKind::Move, cfg).move;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    return hooks;
  };
}

// External spotter channel backed by the adapter; with fallback enabled,
// adapter errors degrade to oracle answers.
inline SpotterChannel make_lm_spotter(std::shared_ptr<LmClient> client, const BoardConfig& cfg,
                                      bool fallback_to_oracle = true) {
  return SpotterChannel::external(
      [client, cfg](const Question& q, const Board& board, const PartialBoard& partial) {
        auto ctx = prompts::spotter_prompt(cfg, board, partial, serialize(q));
        return llm_spotter_answer(*client, ctx);
      },
      fallback_to_oracle);
}

// ---------------------------------------------------------------------------
// Guess Who adapter glue

namespace gw {

inline std::string history_block(const std::vector<guesswho::GwExchange>& history) {
  std::string out;
  for (const auto& ex : history)
    out += "Q: " + ex.question_text + "\nA: " + (ex.answer ? "Yes" : "No") + "\n";
  return out;
}

inline std::string system_prompt(const guesswho::Roster& roster,
                                 const std::vector<guesswho::GwExchange>& history, int budget) {
  std::string out =
      "You are playing Guess Who. The other player has selected a character from the list below, "
      "and your goal is to guess which character they have selected by asking yes-or-no "
      "questions about the character's traits.\n\n"
      "You can ask " +
      std::to_string(budget) +
      " questions in total, and you have to make your guess after asking all of them. If you "
      "guess correctly, you win the game. If you guess incorrectly, you lose the game.\n\n"
      "Given this game history:\n\n<history>\n" +
      history_block(history) + "</history>\n\n";
  out += "This is the list of characters you can ask questions about:\n\n<characters>\n" +
         roster.to_json().dump(2) + "\n</characters>";
  return out;
}

inline constexpr const char* kAttrDslAddendum =
    "Express each question as a program in the following attribute language (s-expressions, "
    "case-insensitive):\n"
    "question := atom | (not q) | (and q q+) | (or q q+)\n"
    "atom := (attr-eq KEY VALUE) | (attr-has KEY VALUE)\n"
    "KEY and VALUE must come from the character list above. Use attr-has for list-valued "
    "attributes such as accessories.\n"
    "Examples: (attr-eq gender male) ; (and (attr-eq hair_color brown) (not (attr-has "
    "accessories glasses)))";

inline std::string question_prompt(int k, int remaining) {
  std::string out =
      "Your task is to generate " + std::to_string(k) +
      " question(s) that will help you gain the most information possible about the secret "
      "character. Each question must be answerable with a Boolean answer (yes/no).\n\n"
      "You have " +
      std::to_string(remaining) + " questions left, including this one.\n\n";
  out += kAttrDslAddendum;
  out +=
      "\n\nPlease think about your answer step by step. When you have come up with your "
      "question(s), please return them as a JSON dictionary with numbered keys, wrapped in "
      "<answer></answer> tags like this: <answer>{\"1\": \"(attr-eq gender male)\", \"2\": "
      "\"(attr-has accessories glasses)\"}</answer>\n"
      "IMPORTANT: Use proper JSON format with double quotes around both keys and values.";
  return out;
}

inline constexpr const char* kGuessPrompt =
    "Your task is to make your one and only guess about the character. Make sure you consider "
    "the context of the theme and all previous questions and answers.\n\n"
    "Guess from the list above.\n\n"
    "Please think about your answer step by step. When you have come up with a final answer, "
    "respond with your guess wrapped in <answer></answer> tags, and optionally square brackets, "
    "e.g. <answer>Mike</answer> or <answer>[Mike]</answer>";

inline std::string strip_brackets(std::string s) {
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace gw

inline std::function<guesswho::GwLmHooks()> make_gw_lm_provider(std::shared_ptr<LmClient> client,
                                                                const guesswho::Roster& roster,
                                                                int budget) {
  // The roster is copied into the provider; hooks receive history per call.
  auto roster_copy = std::make_shared<guesswho::Roster>(roster);
  return [client, roster_copy, budget]() {
    guesswho::GwLmHooks hooks;
    hooks.question_batch =
        [client, roster_copy, budget](int k, const std::vector<guesswho::GwExchange>& history)
        -> std::optional<std::vector<guesswho::AttributeQuestion>> {
      try {
        const std::string system = gw::system_prompt(*roster_copy, history, budget);
        const std::string user =
            gw::question_prompt(k, budget - static_cast<int>(history.size()));
        for (int attempt = 0; attempt <= client->config().max_retries; ++attempt) {
          const std::string completion = client->complete({{"system", system}, {"user", user}});
          const auto answer = extract_answer(completion);
          if (!answer) continue;
          json mapping;
          try {
            mapping = json::parse(*answer);
          } catch (const std::exception&) {
            continue;
          }
          if (!mapping.is_object()) continue;
          std::vector<guesswho::AttributeQuestion> out;
          std::vector<std::string> seen;
          for (const auto& [key, value] : mapping.items()) {
            if (!value.is_string()) continue;
            try {
              auto q = guesswho::parse_attribute_question(value.get<std::string>(),
                                                          roster_copy->schema());
              std::string canonical = guesswho::serialize(q);
              if (std::find(seen.begin(), seen.end(), canonical) != seen.end()) continue;
              seen.push_back(std::move(canonical));
              out.push_back(std::move(q));
            } catch (const std::exception&) {
            }
          }
          if (!out.empty()) return out;
        }
        return std::nullopt;
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    hooks.guess = [client, roster_copy,
                   budget](const std::vector<guesswho::GwExchange>& history)
        -> std::optional<std::string> {
      try {
        const std::string system = gw::system_prompt(*roster_copy, history, budget);
        const std::string completion =
            client->complete({{"system", system}, {"user", gw::kGuessPrompt}});
        const auto answer = extract_answer(completion);
        if (!answer) return std::nullopt;
        return gw::strip_brackets(*answer);
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    return hooks;
  };
}

}  // namespace battleship::llm
