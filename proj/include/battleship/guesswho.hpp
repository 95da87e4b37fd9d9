#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "battleship/belief.hpp"
#include "battleship/rng.hpp"

namespace battleship::guesswho {

using json = nlohmann::json;

// One character: a name plus scalar and set-valued attributes.
struct Entity {
  std::string name;
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<std::string>> sets;

  bool attributes_equal(const Entity& other) const {
    return scalars == other.scalars && sets == other.sets;
  }
};

// Attribute schema observed across a roster: every key with the values it
// takes, partitioned by scalar/set shape.
struct Schema {
  std::map<std::string, std::set<std::string>> scalar_values;
  std::map<std::string, std::set<std::string>> set_values;

  bool has_key(const std::string& key) const {
    return scalar_values.count(key) > 0 || set_values.count(key) > 0;
  }
  bool has_value(const std::string& key, const std::string& value) const {
    if (auto it = scalar_values.find(key); it != scalar_values.end())
      return it->second.count(value) > 0;
    if (auto it = set_values.find(key); it != set_values.end()) return it->second.count(value) > 0;
    return false;
  }
};

class Roster {
 public:
  static Roster from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("roster must be a JSON array of characters");
    Roster roster;
    std::set<std::string> names;
    for (const auto& item : j) {
      Entity e;
      e.name = item.at("name").get<std::string>();
      if (!names.insert(e.name).second)
        throw std::invalid_argument("duplicate character name '" + e.name + "'");
      for (const auto& [key, value] : item.items()) {
        if (key == "name") continue;
        if (value.is_string()) {
          e.scalars[key] = value.get<std::string>();
          roster.schema_.scalar_values[key].insert(value.get<std::string>());
        } else if (value.is_array()) {
          std::vector<std::string> vals;
          for (const auto& v : value) {
            vals.push_back(v.get<std::string>());
            roster.schema_.set_values[key].insert(v.get<std::string>());
          }
          e.sets[key] = std::move(vals);
        } else {
          throw std::invalid_argument("attribute '" + key + "' must be a string or string array");
        }
      }
      roster.entities_.push_back(std::move(e));
    }
    if (roster.entities_.empty()) throw std::invalid_argument("roster is empty");
    // No two characters may be indistinguishable.
    for (std::size_t i = 0; i < roster.entities_.size(); ++i)
      for (std::size_t k = i + 1; k < roster.entities_.size(); ++k)
        if (roster.entities_[i].attributes_equal(roster.entities_[k]))
          throw std::invalid_argument("characters '" + roster.entities_[i].name + "' and '" +
                                      roster.entities_[k].name + "' are indistinguishable");
    return roster;
  }

  static Roster load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open roster file " + path);
    json j;
    in >> j;
    return from_json(j);
  }

  json to_json() const {
    json arr = json::array();
    for (const Entity& e : entities_) {
      json item{{"name", e.name}};
      for (const auto& [k, v] : e.scalars) item[k] = v;
      for (const auto& [k, v] : e.sets) item[k] = v;
      arr.push_back(std::move(item));
    }
    return arr;
  }

  std::size_t size() const { return entities_.size(); }
  const Entity& at(std::size_t i) const { return entities_[i]; }
  const std::vector<Entity>& entities() const { return entities_; }
  const Schema& schema() const { return schema_; }

  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entities_.size(); ++i)
      if (entities_[i].name == name) return i;
    return std::nullopt;
  }

 private:
  std::vector<Entity> entities_;
  Schema schema_;
};

// ---------------------------------------------------------------------------
// Attribute questions

namespace detail {

struct GwNode;
using GwNodePtr = std::shared_ptr<const GwNode>;

struct GwNode {
  enum class Kind : std::int8_t { AttrEq, AttrHas, Not, And, Or } kind;
  std::string key;
  std::string value;
  std::vector<GwNodePtr> children;
};

}  // namespace detail

class AttributeQuestion {
 public:
  AttributeQuestion() = default;

  static AttributeQuestion attr_eq(std::string key, std::string value) {
    auto n = std::make_shared<detail::GwNode>();
    n->kind = detail::GwNode::Kind::AttrEq;
    n->key = std::move(key);
    n->value = std::move(value);
    return AttributeQuestion(std::move(n));
  }
  static AttributeQuestion attr_has(std::string key, std::string value) {
    auto n = std::make_shared<detail::GwNode>();
    n->kind = detail::GwNode::Kind::AttrHas;
    n->key = std::move(key);
    n->value = std::move(value);
    return AttributeQuestion(std::move(n));
  }
  static AttributeQuestion negation(AttributeQuestion q) {
    auto n = std::make_shared<detail::GwNode>();
    n->kind = detail::GwNode::Kind::Not;
    n->children = {q.node_};
    return AttributeQuestion(std::move(n));
  }
  static AttributeQuestion conjunction(std::vector<AttributeQuestion> qs) {
    return combine(detail::GwNode::Kind::And, std::move(qs));
  }
  static AttributeQuestion disjunction(std::vector<AttributeQuestion> qs) {
    return combine(detail::GwNode::Kind::Or, std::move(qs));
  }

  bool valid() const { return node_ != nullptr; }
  const detail::GwNode& node() const { return *node_; }

 private:
  explicit AttributeQuestion(detail::GwNodePtr n) : node_(std::move(n)) {}

  static AttributeQuestion combine(detail::GwNode::Kind kind, std::vector<AttributeQuestion> qs) {
    if (qs.size() < 2) throw std::invalid_argument("and/or need at least two children");
    auto n = std::make_shared<detail::GwNode>();
    n->kind = kind;
    for (auto& q : qs) n->children.push_back(q.node_);
    return AttributeQuestion(std::move(n));
  }

  detail::GwNodePtr node_;
};

namespace detail {

inline bool eval_node(const GwNode& n, const Entity& e) {
  switch (n.kind) {
    case GwNode::Kind::AttrEq: {
      if (auto it = e.scalars.find(n.key); it != e.scalars.end()) return it->second == n.value;
      if (e.sets.count(n.key)) return false;  // eq is a scalar comparison
      throw std::invalid_argument("unknown attribute key '" + n.key + "'");
    }
    case GwNode::Kind::AttrHas: {
      if (auto it = e.sets.find(n.key); it != e.sets.end())
        return std::find(it->second.begin(), it->second.end(), n.value) != it->second.end();
      if (auto it = e.scalars.find(n.key); it != e.scalars.end()) return it->second == n.value;
      throw std::invalid_argument("unknown attribute key '" + n.key + "'");
    }
    case GwNode::Kind::Not: return !eval_node(*n.children[0], e);
    case GwNode::Kind::And:
      for (const auto& c : n.children)
        if (!eval_node(*c, e)) return false;
      return true;
    case GwNode::Kind::Or:
      for (const auto& c : n.children)
        if (eval_node(*c, e)) return true;
      return false;
  }
  return false;
}

inline std::string serialize_node(const GwNode& n) {
  switch (n.kind) {
    case GwNode::Kind::AttrEq: return "(attr-eq " + n.key + " " + n.value + ")";
    case GwNode::Kind::AttrHas: return "(attr-has " + n.key + " " + n.value + ")";
    case GwNode::Kind::Not: return "(not " + serialize_node(*n.children[0]) + ")";
    case GwNode::Kind::And:
    case GwNode::Kind::Or: {
      std::vector<std::string> parts;
      for (const auto& c : n.children) parts.push_back(serialize_node(*c));
      std::sort(parts.begin(), parts.end());
      std::string out = n.kind == GwNode::Kind::And ? "(and" : "(or";
      for (const auto& p : parts) out += " " + p;
      return out + ")";
    }
  }
  return "?";
}

}  // namespace detail

inline bool eval_entity(const AttributeQuestion& q, const Entity& e) {
  return detail::eval_node(q.node(), e);
}

inline std::string serialize(const AttributeQuestion& q) {
  return detail::serialize_node(q.node());
}

// s-expression parser mirroring the battleship question grammar, with atoms
// validated against the roster schema.
inline AttributeQuestion parse_attribute_question(std::string_view text, const Schema& schema);

namespace detail {

class GwParser {
 public:
  GwParser(std::string_view text, const Schema& schema)
      : tokens_(tokenize(text)), schema_(schema) {}

  AttributeQuestion parse() {
    AttributeQuestion q = parse_question();
    if (idx_ != tokens_.size()) fail("unexpected trailing input");
    return q;
  }

 private:
  struct Tok {
    std::string text;
    bool paren;
  };

  static std::vector<Tok> tokenize(std::string_view text) {
    std::vector<Tok> out;
    std::size_t i = 0;
    while (i < text.size()) {
      const char ch = text[i];
      if (std::isspace(static_cast<unsigned char>(ch))) {
        ++i;
        continue;
      }
      if (ch == '(' || ch == ')') {
        out.push_back({std::string(1, ch), true});
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
      out.push_back({std::move(tok), false});
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("attribute question parse error: " + msg);
  }

  const Tok& next(const char* what) {
    if (idx_ >= tokens_.size()) fail(std::string("expected ") + what + ", found end of input");
    return tokens_[idx_++];
  }

  void expect(std::string_view text, const char* what) {
    if (next(what).text != text) fail(std::string("expected ") + what);
  }

  AttributeQuestion parse_question() {
    expect("(", "question");
    const Tok& op = next("operator");
    AttributeQuestion q;
    if (op.text == "attr-eq" || op.text == "attr-has") {
      const std::string key = next("attribute key").text;
      const std::string value = next("attribute value").text;
      if (!schema_.has_key(key)) fail("unknown attribute key '" + key + "'");
      if (!schema_.has_value(key, value))
        fail("value '" + value + "' never occurs for key '" + key + "'");
      q = op.text == "attr-eq" ? AttributeQuestion::attr_eq(key, value)
                               : AttributeQuestion::attr_has(key, value);
    } else if (op.text == "not") {
      q = AttributeQuestion::negation(parse_question());
    } else if (op.text == "and" || op.text == "or") {
      std::vector<AttributeQuestion> children;
      while (idx_ < tokens_.size() && tokens_[idx_].text != ")")
        children.push_back(parse_question());
      if (children.size() < 2) fail("and/or need at least two children");
      q = op.text == "and" ? AttributeQuestion::conjunction(std::move(children))
                           : AttributeQuestion::disjunction(std::move(children));
    } else {
      fail("unknown operator '" + op.text + "'");
    }
    expect(")", "closing paren");
    return q;
  }

  std::vector<Tok> tokens_;
  const Schema& schema_;
  std::size_t idx_ = 0;
};

}  // namespace detail

inline AttributeQuestion parse_attribute_question(std::string_view text, const Schema& schema) {
  return detail::GwParser(text, schema).parse();
}

// ---------------------------------------------------------------------------
// Exact belief over entities (no particles needed: the hypothesis space is
// the roster itself).

class EntityBelief {
 public:
  static EntityBelief uniform(std::size_t n, double epsilon) {
    if (n == 0) throw std::invalid_argument("empty roster");
    if (epsilon < 0.0 || epsilon > 0.5) throw std::invalid_argument("epsilon must be in [0, 0.5]");
    EntityBelief b;
    b.probs_.assign(n, 1.0 / n);
    b.epsilon_ = epsilon;
    return b;
  }

  const std::vector<double>& probs() const { return probs_; }
  double epsilon() const { return epsilon_; }

  // Same binary-symmetric-channel factors as the board belief, applied
  // exactly over the roster.
  EntityBelief update(const AttributeQuestion& q, bool observed, const Roster& roster) const {
    EntityBelief next = *this;
    double total = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      const bool predicted = eval_entity(q, roster.at(i));
      next.probs_[i] *= predicted == observed ? (1.0 - epsilon_) : epsilon_;
      total += next.probs_[i];
    }
    if (total <= 0.0)
      throw DepletedError("depleted: answer contradicts every entity (epsilon = 0)");
    for (double& p : next.probs_) p /= total;
    return next;
  }

  double yes_probability(const AttributeQuestion& q, const Roster& roster) const {
    double p = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i)
      if (eval_entity(q, roster.at(i))) p += probs_[i];
    return std::min(p, 1.0);
  }

  double eig(const AttributeQuestion& q, const Roster& roster) const {
    return eig_bsc(yes_probability(q, roster), epsilon_);
  }

  // MAP guess with ties broken by roster order.
  std::size_t map_guess() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs_.size(); ++i)
      if (probs_[i] > probs_[best]) best = i;
    return best;
  }

 private:
  std::vector<double> probs_;
  double epsilon_ = 0.0;
};

// ---------------------------------------------------------------------------
// Bayes question selection over the attribute template pool

struct ScoredQuestion {
  AttributeQuestion question;
  double eig = 0.0;
  double p_yes = 0.0;
};

namespace detail {

struct AtomEval {
  AttributeQuestion question;
  std::vector<std::uint8_t> bits;  // over the whole roster
};

inline std::vector<AtomEval> evaluate_atoms(const Roster& roster) {
  std::vector<AtomEval> atoms;
  auto add = [&](AttributeQuestion q) {
    AtomEval ae{std::move(q), {}};
    ae.bits.resize(roster.size());
    for (std::size_t i = 0; i < roster.size(); ++i)
      ae.bits[i] = eval_entity(ae.question, roster.at(i)) ? 1 : 0;
    atoms.push_back(std::move(ae));
  };
  for (const auto& [key, values] : roster.schema().scalar_values)
    for (const std::string& v : values) add(AttributeQuestion::attr_eq(key, v));
  for (const auto& [key, values] : roster.schema().set_values)
    for (const std::string& v : values) add(AttributeQuestion::attr_has(key, v));
  return atoms;
}

}  // namespace detail

// argmax-EIG question over all attribute atoms and depth-2 combinations,
// deduplicated by answer vector over the surviving (positive-probability)
// entities. Ties break on the canonical serialization.
inline ScoredQuestion select_question_bayes(const EntityBelief& belief, const Roster& roster) {
  const auto atoms = detail::evaluate_atoms(roster);
  const auto& probs = belief.probs();

  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > 1e-12) survivors.push_back(i);

  std::unordered_set<std::string> seen;
  ScoredQuestion best;
  bool have = false;
  std::string best_key;

  auto consider = [&](const AttributeQuestion& q, const std::vector<std::uint8_t>& bits) {
    std::string survivor_bits(survivors.size(), '0');
    for (std::size_t s = 0; s < survivors.size(); ++s)
      survivor_bits[s] = bits[survivors[s]] ? '1' : '0';
    if (!seen.insert(survivor_bits).second) return;
    double p = 0.0;
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) p += probs[i];
    p = std::min(p, 1.0);
    const double e = eig_bsc(p, belief.epsilon());
    std::string key;
    if (!have || e > best.eig ||
        (e == best.eig && (key = serialize(q)) < best_key)) {
      if (key.empty()) key = serialize(q);
      best = {q, e, p};
      best_key = std::move(key);
      have = true;
    }
  };

  std::vector<std::uint8_t> combined(roster.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    consider(atoms[i].question, atoms[i].bits);
    for (std::size_t j = 0; j < combined.size(); ++j) combined[j] = 1 - atoms[i].bits[j];
    consider(AttributeQuestion::negation(atoms[i].question), combined);
  }
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j) {
      if (atoms[i].question.node().key == atoms[j].question.node().key &&
          atoms[i].question.node().kind == atoms[j].question.node().kind &&
          atoms[i].question.node().kind == detail::GwNode::Kind::AttrEq)
        continue;  // conj of two values of one scalar key is constant-false
      for (std::size_t c = 0; c < combined.size(); ++c)
        combined[c] = atoms[i].bits[c] & atoms[j].bits[c];
      consider(AttributeQuestion::conjunction({atoms[i].question, atoms[j].question}), combined);
      for (std::size_t c = 0; c < combined.size(); ++c)
        combined[c] = atoms[i].bits[c] | atoms[j].bits[c];
      consider(AttributeQuestion::disjunction({atoms[i].question, atoms[j].question}), combined);
    }
  if (!have) throw std::logic_error("empty attribute question pool");
  return best;
}

// ---------------------------------------------------------------------------
// Game runner

enum class GwQuestionRule : std::int8_t { BayesEig, ExternalLm };
enum class GwGuessRule : std::int8_t { BayesMap, ExternalLm };

struct GwPolicy {
  std::string name = "bayes-qm";
  GwQuestionRule question_rule = GwQuestionRule::BayesEig;
  GwGuessRule guess_rule = GwGuessRule::BayesMap;

  static GwPolicy preset(std::string_view name) {
    GwPolicy p;
    p.name = std::string(name);
    if (name == "lm") {
      p.question_rule = GwQuestionRule::ExternalLm;
      p.guess_rule = GwGuessRule::ExternalLm;
    } else if (name == "bayes-q") {
      p.question_rule = GwQuestionRule::BayesEig;
      p.guess_rule = GwGuessRule::ExternalLm;
    } else if (name == "bayes-m") {
      p.question_rule = GwQuestionRule::ExternalLm;
      p.guess_rule = GwGuessRule::BayesMap;
    } else if (name == "bayes-qm") {
      p.question_rule = GwQuestionRule::BayesEig;
      p.guess_rule = GwGuessRule::BayesMap;
    } else {
      throw std::invalid_argument("unknown guesswho policy '" + std::string(name) + "'");
    }
    return p;
  }

  GwPolicy resolved_without_adapter() const {
    GwPolicy p = *this;
    if (p.question_rule == GwQuestionRule::ExternalLm) p.question_rule = GwQuestionRule::BayesEig;
    if (p.guess_rule == GwGuessRule::ExternalLm) p.guess_rule = GwGuessRule::BayesMap;
    return p;
  }
};

// Answerer for attribute questions about the hidden target.
class GwSpotter {
 public:
  using ExternalFn = std::function<bool(const AttributeQuestion&, const Entity&)>;

  static GwSpotter oracle() { return GwSpotter(0.0, Rng(0), false); }
  static GwSpotter noisy(double epsilon, Rng rng) { return GwSpotter(epsilon, rng, true); }
  static GwSpotter external(ExternalFn fn, bool fallback_to_oracle) {
    GwSpotter s(0.0, Rng(0), false);
    s.external_ = std::move(fn);
    s.fallback_ = fallback_to_oracle;
    return s;
  }

  double epsilon() const { return noisy_ ? epsilon_ : 0.0; }
  const char* kind_name() const { return external_ ? "external" : (noisy_ ? "noisy" : "oracle"); }

  bool answer(const AttributeQuestion& q, const Entity& target) {
    if (external_) {
      try {
        return external_(q, target);
      } catch (const std::exception&) {
        if (!fallback_) throw;
      }
    }
    const bool truth = eval_entity(q, target);
    if (noisy_ && epsilon_ > 0.0 && rng_.bernoulli(epsilon_)) return !truth;
    return truth;
  }

 private:
  GwSpotter(double epsilon, Rng rng, bool noisy) : epsilon_(epsilon), rng_(rng), noisy_(noisy) {}

  double epsilon_;
  Rng rng_;
  bool noisy_;
  ExternalFn external_;
  bool fallback_ = false;
};

// Question/answer pairs asked so far, rendered into LM prompts as history.
struct GwExchange {
  std::string question_text;
  bool answer = false;
};

struct GwLmHooks {
  std::function<std::optional<std::vector<AttributeQuestion>>(int k,
                                                              const std::vector<GwExchange>&)>
      question_batch;
  std::function<std::optional<std::string>(const std::vector<GwExchange>&)> guess;
};

struct GwEvent {
  enum class Type : std::int8_t { Question, Answer, Guess, Fallback } type;
  std::string text;
  double eig = 0.0;
  double p_yes = 0.0;
  bool answer = false;
  std::string channel;
  std::string guess_name;
  bool correct = false;
  std::string reason;

  json to_json() const {
    switch (type) {
      case Type::Question:
        return {{"type", "question"}, {"text", text}, {"eig", eig}, {"p_yes", p_yes}};
      case Type::Answer: return {{"type", "answer"}, {"value", answer}, {"channel", channel}};
      case Type::Guess:
        return {{"type", "guess"}, {"name", guess_name}, {"correct", correct}};
      case Type::Fallback: return {{"type", "fallback"}, {"reason", reason}};
    }
    return {};
  }
};

struct GwResult {
  bool win = false;
  std::string target;
  std::string guess;
  int questions_used = 0;
  std::vector<GwEvent> events;
  json header;

  std::string to_jsonl() const {
    std::string out = header.dump();
    out += '\n';
    for (const GwEvent& e : events) {
      out += e.to_json().dump();
      out += '\n';
    }
    double eig_total = 0.0;
    int n = 0, redundant = 0;
    for (const GwEvent& e : events)
      if (e.type == GwEvent::Type::Question) {
        ++n;
        eig_total += e.eig;
        redundant += e.eig < 1e-9;
      }
    json metrics{{"type", "metrics"},
                 {"success", win},
                 {"target", target},
                 {"guess", guess},
                 {"questions_used", questions_used}};
    metrics["mean_eig"] = n > 0 ? json(eig_total / n) : json(nullptr);
    metrics["redundant_fraction"] = n > 0 ? json(static_cast<double>(redundant) / n) : json(nullptr);
    out += metrics.dump();
    out += '\n';
    return out;
  }
};

struct GwRunOptions {
  double epsilon_belief = 0.0;
  std::function<GwLmHooks()> lm_provider;
  json run_config;
};

// One game: ask while the question budget lasts, then one MAP (or LM) guess.
// The target is drawn uniformly from the roster.
inline GwResult run_guesswho(const Roster& roster, const GwPolicy& policy, GwSpotter spotter,
                             int budget, std::uint64_t seed, const GwRunOptions& options = {}) {
  if (budget < 0) throw std::invalid_argument("budget must be >= 0");
  const GwPolicy resolved =
      options.lm_provider ? policy : policy.resolved_without_adapter();

  Rng rng(seed);
  const std::size_t target_idx = rng.index(roster.size());
  const Entity& target = roster.at(target_idx);

  GwResult result;
  result.target = target.name;
  result.header = json{{"v", 1},
                       {"type", "header"},
                       {"environment", "guesswho"},
                       {"roster_size", roster.size()},
                       {"budget", budget},
                       {"policy", policy.name},
                       {"seed", seed},
                       {"options",
                        {{"epsilon_belief", options.epsilon_belief},
                         {"spotter", spotter.kind_name()},
                         {"epsilon_channel", spotter.epsilon()}}}};
  if (!options.run_config.is_null()) result.header["run_config"] = options.run_config;

  EntityBelief belief = EntityBelief::uniform(roster.size(), options.epsilon_belief);
  GwLmHooks hooks;
  if (options.lm_provider) hooks = options.lm_provider();
  std::vector<GwExchange> history;

  for (int asked = 0; asked < budget; ++asked) {
    ScoredQuestion chosen;
    bool have = false;
    if (resolved.question_rule == GwQuestionRule::ExternalLm && hooks.question_batch) {
      if (auto qs = hooks.question_batch(1, history); qs && !qs->empty()) {
        const AttributeQuestion& q = qs->front();
        chosen = {q, belief.eig(q, roster), belief.yes_probability(q, roster)};
        have = true;
      } else {
        GwEvent fe{};
        fe.type = GwEvent::Type::Fallback;
        fe.reason = "lm question unavailable";
        result.events.push_back(std::move(fe));
      }
    }
    if (!have) chosen = select_question_bayes(belief, roster);

    GwEvent qe{};
    qe.type = GwEvent::Type::Question;
    qe.text = serialize(chosen.question);
    qe.eig = chosen.eig;
    qe.p_yes = chosen.p_yes;
    result.events.push_back(std::move(qe));

    const bool answer = spotter.answer(chosen.question, target);
    GwEvent ae{};
    ae.type = GwEvent::Type::Answer;
    ae.answer = answer;
    ae.channel = spotter.kind_name();
    result.events.push_back(std::move(ae));

    belief = belief.update(chosen.question, answer, roster);
    history.push_back({serialize(chosen.question), answer});
    result.questions_used++;
  }

  std::size_t guess_idx = belief.map_guess();
  if (resolved.guess_rule == GwGuessRule::ExternalLm && hooks.guess) {
    if (auto name = hooks.guess(history)) {
      if (auto idx = roster.index_of(*name)) {
        guess_idx = *idx;
      } else {
        GwEvent fe{};
        fe.type = GwEvent::Type::Fallback;
        fe.reason = "lm guessed an unknown character";
        result.events.push_back(std::move(fe));
      }
    } else {
      GwEvent fe{};
      fe.type = GwEvent::Type::Fallback;
      fe.reason = "lm guess unavailable";
      result.events.push_back(std::move(fe));
    }
  }

  result.guess = roster.at(guess_idx).name;
  result.win = guess_idx == target_idx;
  GwEvent ge{};
  ge.type = GwEvent::Type::Guess;
  ge.guess_name = result.guess;
  ge.correct = result.win;
  result.events.push_back(std::move(ge));
  return result;
}

}  // namespace battleship::guesswho
