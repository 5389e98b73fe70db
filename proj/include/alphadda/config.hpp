#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "alphadda/arena.hpp"
#include "alphadda/io.hpp"
#include "alphadda/training.hpp"

namespace alphadda {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Preset { Paper, Desk };

inline Preset parse_preset(const std::string& s) {
  if (s == "paper") return Preset::Paper;
  if (s == "desk") return Preset::Desk;
  throw ConfigError("unknown preset '" + s + "' (expected paper or desk)");
}

inline std::string to_string(Preset p) { return p == Preset::Paper ? "paper" : "desk"; }

namespace detail {

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
}

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
T get_as(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad or missing value for '" + key + "' in " + where);
  }
}

}  // namespace detail

/// Agent description as it appears in run configs and session requests.
///   {"kind": "DDA1", "name": "...", "evaluator": "auto|network|heuristic",
///    "checkpoint": "path", "params": {"a_sim": 2.0, ...}}
struct AgentSpec {
  AgentKind kind = AgentKind::Random;
  std::string name;
  std::string evaluator = "auto";
  std::string checkpoint;
  std::vector<std::pair<std::string, double>> params;

  std::string label() const { return name.empty() ? to_string(kind) : name; }
};

inline AgentSpec parse_agent_spec(const json& j, const std::string& where = "agent") {
  if (j.is_string()) return parse_agent_spec(json{{"kind", j}}, where);
  detail::check_keys(j, {"kind", "name", "evaluator", "checkpoint", "params"}, where);
  AgentSpec s;
  try {
    s.kind = parse_agent_kind(detail::get_as<std::string>(j, "kind", where));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()) + " in " + where);
  }
  if (j.contains("name")) s.name = detail::get_as<std::string>(j, "name", where);
  if (j.contains("evaluator")) s.evaluator = detail::get_as<std::string>(j, "evaluator", where);
  if (s.evaluator != "auto" && s.evaluator != "network" && s.evaluator != "heuristic")
    throw ConfigError("evaluator must be auto, network or heuristic in " + where);
  if (j.contains("checkpoint")) s.checkpoint = detail::get_as<std::string>(j, "checkpoint", where);
  if (j.contains("params")) {
    detail::require_object(j.at("params"), where + ".params");
    AgentConfig probe;
    probe.kind = s.kind;
    for (const auto& [key, value] : j.at("params").items()) {
      if (!value.is_number()) throw ConfigError("parameter '" + key + "' in " + where + " must be a number");
      try {
        set_parameter(probe, key, value.get<double>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(e.what()) + " in " + where);
      }
      s.params.emplace_back(key, value.get<double>());
    }
  }
  return s;
}

inline json to_json(const AgentSpec& s) {
  json j = {{"kind", to_string(s.kind)}, {"evaluator", s.evaluator}};
  if (!s.name.empty()) j["name"] = s.name;
  if (!s.checkpoint.empty()) j["checkpoint"] = s.checkpoint;
  json p = json::object();
  for (const auto& [k, v] : s.params) p[k] = v;
  j["params"] = p;
  return j;
}

/// Loads each checkpoint once and shares the evaluator read-only.
class EvaluatorCache {
 public:
  std::shared_ptr<const Evaluator> network(const std::string& path) {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(path);
    if (it != cache_.end()) return it->second;
    auto ev = std::make_shared<const NetworkEvaluator>(load_checkpoint(path));
    cache_.emplace(path, ev);
    return ev;
  }

  std::shared_ptr<const Evaluator> heuristic() {
    static const auto h = std::make_shared<const HeuristicEvaluator>();
    return h;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Evaluator>> cache_;
};

/// Builds a playable agent. "auto" uses the agent's own checkpoint, then
/// `default_checkpoint`, then the heuristic evaluator.
inline AgentConfig build_agent(const AgentSpec& spec, Variant v, EvaluatorCache& cache,
                               const std::string& default_checkpoint = "") {
  AgentConfig c = AgentConfig::make(spec.kind, v);
  c.name = spec.name;
  if (uses_evaluator(spec.kind)) {
    const std::string path = spec.checkpoint.empty() ? default_checkpoint : spec.checkpoint;
    if (spec.evaluator == "heuristic" || (spec.evaluator == "auto" && path.empty())) {
      c.evaluator = cache.heuristic();
    } else {
      if (path.empty()) throw ConfigError(spec.label() + " needs a checkpoint for its network evaluator");
      c.evaluator = cache.network(path);
      c.checkpoint = path;
      const auto* net = dynamic_cast<const NetworkEvaluator*>(c.evaluator.get());
      if (net && net->network().config().variant != v)
        throw ConfigError("checkpoint '" + path + "' was trained for " +
                          std::string(variant_name(net->network().config().variant)));
    }
  }
  for (const auto& [k, x] : spec.params) set_parameter(c, k, x);
  return c;
}

struct MatchSection {
  std::string a, b;
  int games = 40;
};

struct EloSection {
  int rounds = 20;
};

struct SweepOpponent {
  std::string agent;
  double rating = kEloInitial;
};

struct SweepSection {
  std::string subject;
  std::string param = "n_sim";
  std::vector<double> values;
  std::vector<SweepOpponent> opponents;
  int games = 50;
};

struct GridSection {
  std::string subject;
  std::vector<std::pair<std::string, std::vector<double>>> grid;
  std::vector<std::string> opponents;
  int games = 40;
};

/// Everything a CLI command needs. Defaults follow the chosen preset.
struct RunConfig {
  Variant game = Variant::Connect4;
  Preset preset = Preset::Desk;
  std::uint64_t seed = 1;
  std::string out = "out";
  int threads = 1;
  std::string checkpoint;
  NetworkConfig network = NetworkConfig::desk(Variant::Connect4);
  TrainConfig train = TrainConfig::desk(Variant::Connect4);
  std::vector<AgentSpec> agents;
  std::optional<MatchSection> match;
  std::optional<EloSection> elo;
  std::optional<SweepSection> sweep;
  std::optional<GridSection> gridsearch;

  const AgentSpec& agent(const std::string& label) const {
    for (const auto& a : agents)
      if (a.label() == label) return a;
    throw ConfigError("no agent labelled '" + label + "' in agents");
  }
};

namespace detail {

inline void apply_network_overrides(NetworkConfig& n, const json& j) {
  const std::string where = "network";
  check_keys(j, {"blocks", "filters", "kernel", "value_hidden", "policy_hidden"}, where);
  if (j.contains("blocks")) n.blocks = get_as<int>(j, "blocks", where);
  if (j.contains("filters")) n.filters = get_as<int>(j, "filters", where);
  if (j.contains("kernel")) n.kernel = get_as<int>(j, "kernel", where);
  if (j.contains("value_hidden")) n.value_hidden = get_as<int>(j, "value_hidden", where);
  if (j.contains("policy_hidden")) n.policy_hidden = get_as<int>(j, "policy_hidden", where);
  if (n.blocks < 0 || n.filters < 1 || n.kernel < 1 || n.kernel % 2 == 0 || n.value_hidden < 1 || n.policy_hidden < 1)
    throw ConfigError("network dimensions out of range");
}

inline void apply_train_overrides(TrainConfig& t, const json& j) {
  const std::string where = "train";
  const std::map<std::string, int*> ints = {
      {"n_iter", &t.n_iter},     {"n_self", &t.n_self},   {"n_sim", &t.n_sim},   {"t_opening", &t.t_opening},
      {"n_queue", &t.n_queue},   {"n_epoch", &t.n_epoch}, {"n_batch", &t.n_batch}};
  const std::map<std::string, double*> reals = {
      {"c_puct", &t.c_puct},           {"tau", &t.tau},
      {"epsilon_noise", &t.epsilon_noise}, {"dirichlet_alpha", &t.dirichlet_alpha},
      {"learning_rate", &t.learning_rate}, {"momentum", &t.momentum},
      {"weight_decay", &t.weight_decay}};
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    if (auto it = ints.find(key); it != ints.end())
      *it->second = get_as<int>(j, key, where);
    else if (auto rt = reals.find(key); rt != reals.end())
      *rt->second = get_as<double>(j, key, where);
    else
      throw ConfigError("unknown key '" + key + "' in train");
  }
  if (t.n_iter < 0 || t.n_self < 1 || t.n_sim < 1 || t.n_batch < 1 || t.n_epoch < 1 || t.n_queue < 1)
    throw ConfigError("train counts must be positive");
}

inline std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a non-empty list of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(where + " must be a non-empty list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

/// Parses a run config. `preset` (when given) overrides the document's
/// preset; network and train defaults come from the preset before the
/// document's overrides apply.
inline RunConfig parse_run_config(const json& j, std::optional<Preset> preset = std::nullopt) {
  using detail::get_as;
  detail::check_keys(j,
                     {"game", "preset", "seed", "out", "threads", "checkpoint", "network", "train", "agents", "match",
                      "elo", "sweep", "gridsearch"},
                     "config");
  RunConfig c;
  if (j.contains("game")) {
    try {
      c.game = parse_variant(get_as<std::string>(j, "game", "config"));
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value for 'game': " + j.at("game").dump());
    }
  }
  if (j.contains("preset")) c.preset = parse_preset(get_as<std::string>(j, "preset", "config"));
  if (preset) c.preset = *preset;
  c.network = c.preset == Preset::Paper ? NetworkConfig::paper(c.game) : NetworkConfig::desk(c.game);
  c.train = c.preset == Preset::Paper ? TrainConfig::paper(c.game) : TrainConfig::desk(c.game);
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed", "config");
  if (j.contains("out")) c.out = get_as<std::string>(j, "out", "config");
  if (j.contains("threads")) c.threads = std::max(1, get_as<int>(j, "threads", "config"));
  if (j.contains("checkpoint")) c.checkpoint = get_as<std::string>(j, "checkpoint", "config");
  if (j.contains("network")) detail::apply_network_overrides(c.network, j.at("network"));
  if (j.contains("train")) detail::apply_train_overrides(c.train, j.at("train"));

  if (j.contains("agents")) {
    if (!j.at("agents").is_array()) throw ConfigError("agents must be a list");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < j.at("agents").size(); ++i) {
      c.agents.push_back(parse_agent_spec(j.at("agents")[i], "agents[" + std::to_string(i) + "]"));
      if (!labels.insert(c.agents.back().label()).second)
        throw ConfigError("duplicate agent label '" + c.agents.back().label() + "'; set distinct names");
    }
  }
  if (j.contains("match")) {
    const auto& m = j.at("match");
    detail::check_keys(m, {"a", "b", "games"}, "match");
    MatchSection s{get_as<std::string>(m, "a", "match"), get_as<std::string>(m, "b", "match")};
    if (m.contains("games")) s.games = get_as<int>(m, "games", "match");
    if (s.games <= 0 || s.games % 2) throw ConfigError("match.games must be a positive even number");
    c.agent(s.a);
    c.agent(s.b);
    c.match = s;
  }
  if (j.contains("elo")) {
    const auto& e = j.at("elo");
    detail::check_keys(e, {"rounds"}, "elo");
    EloSection s;
    if (e.contains("rounds")) s.rounds = get_as<int>(e, "rounds", "elo");
    if (s.rounds <= 0) throw ConfigError("elo.rounds must be positive");
    c.elo = s;
  }
  if (j.contains("sweep")) {
    const auto& w = j.at("sweep");
    detail::check_keys(w, {"subject", "param", "values", "opponents", "games"}, "sweep");
    SweepSection s;
    s.subject = get_as<std::string>(w, "subject", "sweep");
    c.agent(s.subject);
    if (w.contains("param")) s.param = get_as<std::string>(w, "param", "sweep");
    s.values = detail::number_list(w.at("values"), "sweep.values");
    if (w.contains("games")) s.games = get_as<int>(w, "games", "sweep");
    if (s.games <= 0 || s.games % 2) throw ConfigError("sweep.games must be a positive even number");
    if (!w.contains("opponents") || !w.at("opponents").is_array()) throw ConfigError("sweep.opponents must be a list");
    for (const auto& o : w.at("opponents")) {
      detail::check_keys(o, {"agent", "rating"}, "sweep.opponents");
      SweepOpponent so{get_as<std::string>(o, "agent", "sweep.opponents")};
      if (o.contains("rating")) so.rating = get_as<double>(o, "rating", "sweep.opponents");
      c.agent(so.agent);
      s.opponents.push_back(so);
    }
    AgentConfig probe;
    probe.kind = c.agent(s.subject).kind;
    try {
      set_parameter(probe, s.param, s.values.front());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(e.what()) + " in sweep");
    }
    c.sweep = s;
  }
  if (j.contains("gridsearch")) {
    const auto& g = j.at("gridsearch");
    detail::check_keys(g, {"subject", "grid", "opponents", "include_random", "games"}, "gridsearch");
    GridSection s;
    s.subject = get_as<std::string>(g, "subject", "gridsearch");
    c.agent(s.subject);
    detail::require_object(g.at("grid"), "gridsearch.grid");
    AgentConfig probe;
    probe.kind = c.agent(s.subject).kind;
    for (const auto& [name, values] : g.at("grid").items()) {
      s.grid.emplace_back(name, detail::number_list(values, "gridsearch.grid." + name));
      try {
        set_parameter(probe, name, s.grid.back().second.front());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(e.what()) + " in gridsearch");
      }
    }
    if (s.grid.empty()) throw ConfigError("gridsearch.grid is empty");
    if (g.contains("opponents")) {
      s.opponents = get_as<std::vector<std::string>>(g, "opponents", "gridsearch");
      for (const auto& o : s.opponents) c.agent(o);
    } else {
      // Every other agent; Random only on request, since the adjusting
      // agents cannot level with it and it would dominate the objective.
      const bool with_random = g.contains("include_random") && get_as<bool>(g, "include_random", "gridsearch");
      for (const auto& a : c.agents)
        if (a.label() != s.subject && (with_random || a.kind != AgentKind::Random)) s.opponents.push_back(a.label());
    }
    if (s.opponents.empty()) throw ConfigError("gridsearch has no opponents");
    if (g.contains("games")) s.games = get_as<int>(g, "games", "gridsearch");
    if (s.games <= 0 || s.games % 2) throw ConfigError("gridsearch.games must be a positive even number");
    c.gridsearch = s;
  }
  return c;
}

}  // namespace alphadda
