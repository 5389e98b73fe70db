#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "alphadda/arena.hpp"
#include "alphadda/config.hpp"
#include "alphadda/io.hpp"

namespace alphadda {

/// Rejected request: HTTP status plus a JSON body with at least "error".
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, json body)
      : std::runtime_error(body.value("error", std::string("error"))), status_(status), body_(std::move(body)) {}
  int status() const { return status_; }
  const json& body() const { return body_; }

 private:
  int status_;
  json body_;
};

enum class SessionStatus { AwaitingHuman, AwaitingAgent, Finished, Failed };

inline std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::AwaitingHuman: return "AwaitingHuman";
    case SessionStatus::AwaitingAgent: return "AwaitingAgent";
    case SessionStatus::Finished: return "Finished";
    case SessionStatus::Failed: return "Failed";
  }
  return "?";
}

inline std::string color_char(Color c) { return c == kFirst ? "X" : c == kSecond ? "O" : "draw"; }

struct ServiceOptions {
  std::string snapshot_dir;        // empty: no persistence
  std::string default_checkpoint;  // used by network agents without their own
  bool async = true;               // agent replies off the request path
  std::size_t max_sessions = 1000;
};

/// One human-vs-agent game.
struct Session {
  struct Ply {
    bool by_agent = false;
    Move move;
    std::optional<DdaDiagnostics> dda;
    std::optional<int> n_sim;
  };

  std::string id;
  Variant variant = Variant::Connect4;
  Color human = kFirst;
  AgentSpec spec;
  AgentConfig agent_config;
  std::unique_ptr<Agent> agent;
  std::uint64_t seed = 0;
  Board board;
  std::vector<Board> boards;  // position before each ply
  std::vector<Ply> plies;
  SessionStatus status = SessionStatus::AwaitingHuman;
  std::string error;

  mutable std::mutex mutex;
  std::future<void> worker;

  Color agent_color() const { return -human; }
  std::size_t agent_turns() const {
    std::size_t n = 0;
    for (const auto& p : plies) n += p.by_agent;
    return n;
  }
};

inline json move_json(Variant v, const Move& m) {
  json j = {{"action", action_index(v, m)}, {"label", to_string(m)}};
  switch (m.kind) {
    case Move::Kind::Drop: j["kind"] = "drop"; j["col"] = m.col; break;
    case Move::Kind::Place: j["kind"] = "place"; j["row"] = m.row; j["col"] = m.col; break;
    case Move::Kind::Pass: j["kind"] = "pass"; break;
  }
  return j;
}

inline std::optional<std::string> knob_name(AgentKind k) {
  if (k == AgentKind::Dda1) return "n_sim";
  if (k == AgentKind::Dda2) return "p_drop";
  return std::nullopt;
}

class SessionManager {
 public:
  explicit SessionManager(ServiceOptions options = {}) : options_(std::move(options)) {
    if (!options_.snapshot_dir.empty()) std::filesystem::create_directories(options_.snapshot_dir);
  }

  ~SessionManager() { wait_all(); }

  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  static json agent_catalog() {
    json kinds = json::array();
    for (AgentKind k : kAllAgentKinds) {
      json e = {{"kind", to_string(k)}, {"uses_evaluator", uses_evaluator(k)}, {"adjusts", is_dda(k)}};
      const auto knob = knob_name(k);
      e["knob"] = knob ? json(*knob) : json(nullptr);
      kinds.push_back(e);
    }
    return {{"agents", kinds}, {"games", {"connect4", "othello6", "othello8"}}};
  }

  /// Request: {"game": "connect4", "agent": AgentSpec, "human": "first"|"second", "seed": n}
  json create(const json& request) {
    try {
      detail::check_keys(request, {"game", "agent", "human", "seed"}, "request");
    } catch (const ConfigError& e) {
      throw ServiceError(400, {{"error", e.what()}});
    }
    auto s = std::make_shared<Session>();
    try {
      s->variant = parse_variant(detail::get_as<std::string>(request, "game", "request"));
    } catch (const std::exception&) {
      throw ServiceError(400, {{"error", "bad or missing 'game'"}});
    }
    const std::string seat = request.value("human", std::string("first"));
    if (seat != "first" && seat != "second") throw ServiceError(400, {{"error", "'human' must be first or second"}});
    s->human = seat == "first" ? kFirst : kSecond;
    if (!request.contains("agent")) throw ServiceError(400, {{"error", "missing 'agent'"}});
    try {
      s->spec = parse_agent_spec(request.at("agent"));
      s->agent_config = build_agent(s->spec, s->variant, cache_, options_.default_checkpoint);
    } catch (const std::exception& e) {
      throw ServiceError(400, {{"error", e.what()}});
    }
    if (request.contains("seed")) {
      if (!request.at("seed").is_number_unsigned()) throw ServiceError(400, {{"error", "'seed' must be unsigned"}});
      s->seed = request.at("seed").get<std::uint64_t>();
    } else {
      s->seed = std::random_device{}();
    }
    s->id = fresh_id();
    s->agent = make_agent(s->agent_config);
    s->agent->start_game(s->agent_color());
    s->board = new_game(s->variant);
    s->status = s->human == kFirst ? SessionStatus::AwaitingHuman : SessionStatus::AwaitingAgent;
    std::unique_lock lock(s->mutex);
    {
      std::unique_lock reg(registry_mutex_);
      if (sessions_.size() >= options_.max_sessions) throw ServiceError(503, {{"error", "too many sessions"}});
      sessions_[s->id] = s;
    }
    snapshot(*s);
    if (s->status == SessionStatus::AwaitingAgent) start_agent(s, lock);
    return view(*s);
  }

  json get(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    return view(*s);
  }

  /// Request: {"action": n} or {"col": c} / {"row": r, "col": c} or {"pass": true}.
  json play(const std::string& id, const json& request) {
    auto s = find(id);
    std::unique_lock lock(s->mutex);
    if (s->status != SessionStatus::AwaitingHuman)
      throw ServiceError(409, {{"error", "not the human's turn"}, {"status", to_string(s->status)}});
    const Move m = parse_move(*s, request);
    apply_ply(*s, m, false, std::nullopt, std::nullopt);
    if (s->status == SessionStatus::AwaitingAgent) start_agent(s, lock);
    return view(*s);
  }

  /// Blocks until the session's agent is idle (tests and shutdown).
  void wait(const std::string& id) {
    auto s = find(id);
    for (;;) {
      std::future<void> f;
      {
        std::lock_guard lock(s->mutex);
        if (!s->worker.valid()) return;
        f = std::move(s->worker);
      }
      f.wait();
    }
  }

  void wait_all() {
    std::vector<std::string> ids;
    {
      std::shared_lock lock(registry_mutex_);
      for (const auto& [id, _] : sessions_) ids.push_back(id);
    }
    for (const auto& id : ids) wait(id);
  }

  std::size_t size() const {
    std::shared_lock lock(registry_mutex_);
    return sessions_.size();
  }

  /// Rebuilds every snapshotted session by replaying its move log. Returns
  /// the number restored; unreadable snapshots are skipped and reported.
  std::size_t restore(std::vector<std::string>* problems = nullptr) {
    if (options_.snapshot_dir.empty()) return 0;
    std::size_t restored = 0;
    for (const auto& entry : std::filesystem::directory_iterator(options_.snapshot_dir)) {
      if (entry.path().extension() != ".json") continue;
      try {
        auto s = load_snapshot(entry.path());
        std::unique_lock reg(registry_mutex_);
        if (sessions_.count(s->id)) continue;
        sessions_[s->id] = s;
        reg.unlock();
        std::unique_lock lock(s->mutex);
        if (s->status == SessionStatus::AwaitingAgent) start_agent(s, lock);
        ++restored;
      } catch (const std::exception& e) {
        if (problems) problems->push_back(entry.path().string() + ": " + e.what());
      }
    }
    return restored;
  }

  static json view(const Session& s) {
    json cells = json::array();
    for (int r = 0; r < s.board.rows(); ++r) {
      std::string row;
      for (int c = 0; c < s.board.cols(); ++c) row += Board::cell_char(s.board.at(r, c));
      cells.push_back(row);
    }
    json legal = json::array();
    if (s.status == SessionStatus::AwaitingHuman)
      for (const Move& m : s.board.valid_moves()) legal.push_back(move_json(s.variant, m));
    json moves = json::array(), diag = json::array();
    for (std::size_t i = 0; i < s.plies.size(); ++i) {
      const auto& p = s.plies[i];
      json mj = move_json(s.variant, p.move);
      mj["ply"] = i;
      mj["by"] = p.by_agent ? "agent" : "human";
      moves.push_back(mj);
      if (!p.by_agent) continue;
      json d = {{"ply", i}, {"v_n", nullptr}, {"v_bar", nullptr}, {"n_sim", nullptr}, {"p_drop", nullptr}};
      if (p.dda) {
        d["v_n"] = p.dda->v_n;
        d["v_bar"] = p.dda->v_bar;
        if (p.dda->n_sim) d["n_sim"] = *p.dda->n_sim;
        if (p.dda->p_drop) d["p_drop"] = *p.dda->p_drop;
      } else if (p.n_sim) {
        d["n_sim"] = *p.n_sim;
      }
      diag.push_back(d);
    }
    const auto outcome = s.board.outcome();
    const auto knob = knob_name(s.spec.kind);
    return {{"id", s.id},
            {"game", std::string(variant_name(s.variant))},
            {"rows", s.board.rows()},
            {"cols", s.board.cols()},
            {"human", color_char(s.human)},
            {"agent", {{"kind", to_string(s.spec.kind)}, {"label", s.spec.label()}, {"knob", knob ? json(*knob) : json(nullptr)}}},
            {"status", to_string(s.status)},
            {"to_move", outcome ? json(nullptr) : json(color_char(s.board.to_move()))},
            {"turn", s.board.turn_index()},
            {"board", cells},
            {"legal_moves", legal},
            {"moves", moves},
            {"diagnostics", diag},
            {"winner", outcome ? json(color_char(*outcome)) : json(nullptr)},
            {"error", s.error.empty() ? json(nullptr) : json(s.error)}};
  }

 private:
  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(registry_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, {{"error", "no session '" + id + "'"}});
    return it->second;
  }

  std::string fresh_id() {
    std::random_device rd;
    for (;;) {
      const std::uint64_t x = (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^ mix_seed(counter_++, 0x5e55);
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
      std::shared_lock lock(registry_mutex_);
      if (!sessions_.count(buf)) return buf;
    }
  }

  static Move parse_move(const Session& s, const json& r) {
    const auto legal = s.board.valid_moves();
    auto reject = [&](const std::string& why) {
      json list = json::array();
      for (const Move& m : legal) list.push_back(move_json(s.variant, m));
      return ServiceError(400, {{"error", why}, {"legal_moves", list}});
    };
    if (!r.is_object()) throw reject("move request must be an object");
    for (const auto& [key, _] : r.items())
      if (key != "action" && key != "row" && key != "col" && key != "pass") throw reject("unknown key '" + key + "'");
    Move m;
    try {
      if (r.contains("action")) {
        m = action_move(s.variant, r.at("action").get<int>());
      } else if (r.value("pass", false)) {
        m = Move::pass();
      } else if (r.contains("col")) {
        const int c = r.at("col").get<int>();
        m = is_othello(s.variant) ? Move::place(r.at("row").get<int>(), c) : Move::drop(c);
      } else {
        throw reject("no move given");
      }
    } catch (const ServiceError&) {
      throw;
    } catch (const std::exception&) {
      throw reject("malformed move");
    }
    if (std::find(legal.begin(), legal.end(), m) == legal.end()) throw reject("illegal move " + to_string(m));
    return m;
  }

  // Caller holds s.mutex.
  void apply_ply(Session& s, const Move& m, bool by_agent, std::optional<DdaDiagnostics> dda,
                 std::optional<int> n_sim) {
    s.boards.push_back(s.board);
    s.board = s.board.apply(m);
    s.plies.push_back({by_agent, m, dda, n_sim});
    if (s.board.is_terminal())
      s.status = SessionStatus::Finished;
    else
      s.status = s.board.to_move() == s.human ? SessionStatus::AwaitingHuman : SessionStatus::AwaitingAgent;
    snapshot(s);
  }

  static std::optional<int> plain_sims(const AgentConfig& c) {
    switch (c.kind) {
      case AgentKind::AlphaZero: return c.search.n_sim;
      case AgentKind::Mcts1:
      case AgentKind::Mcts2: return c.uct.n_sim;
      default: return std::nullopt;
    }
  }

  // Computes the agent's reply. The agent object is touched only here and
  // only while the session is AwaitingAgent, so the search runs unlocked.
  // Returns whether the agent is to move again.
  bool agent_turn(const std::shared_ptr<Session>& s) {
    Board state;
    std::uint64_t seed;
    {
      std::lock_guard lock(s->mutex);
      state = s->board;
      seed = mix_seed(s->seed, s->plies.size());
    }
    try {
      Rng rng(seed);
      const Move m = s->agent->decide(state, rng);
      const auto dda = s->agent->last_diagnostics();
      std::lock_guard lock(s->mutex);
      apply_ply(*s, m, true, is_dda(s->spec.kind) ? dda : std::nullopt, plain_sims(s->agent_config));
      return s->status == SessionStatus::AwaitingAgent;
    } catch (const std::exception& e) {
      std::lock_guard lock(s->mutex);
      s->status = SessionStatus::Failed;
      s->error = e.what();
      return false;
    }
  }

  // Caller holds `lock` on s->mutex. Sync mode releases it while searching.
  void start_agent(const std::shared_ptr<Session>& s, std::unique_lock<std::mutex>& lock) {
    if (options_.async) {
      // The worker never relocks after its last ply, so replacing a finished
      // future while holding the session lock cannot deadlock.
      s->worker = std::async(std::launch::async, [this, s] {
        while (agent_turn(s)) {
        }
      });
      return;
    }
    lock.unlock();
    while (agent_turn(s)) {
    }
    lock.lock();
  }

  // -- persistence -----------------------------------------------------------
  //   <dir>/<id>.json   {"id","game","human","agent","seed"}
  //   <dir>/<id>.jsonl  one game-record line per ply (board before the ply)

  void snapshot(const Session& s) const {
    if (options_.snapshot_dir.empty()) return;
    const std::filesystem::path dir(options_.snapshot_dir);
    GameRecord rec;
    const auto outcome = s.board.outcome();
    for (std::size_t i = 0; i < s.plies.size(); ++i)
      rec.push_back({s.boards[i], {}, outcome.value_or(0), s.plies[i].move, s.plies[i].dda});
    std::ostringstream records;
    write_records(records, {rec});
    const json meta = {{"id", s.id},
                       {"game", std::string(variant_name(s.variant))},
                       {"human", s.human == kFirst ? "first" : "second"},
                       {"agent", to_json(s.spec)},
                       {"seed", s.seed}};
    write_atomically(dir / (s.id + ".jsonl"), records.str());
    write_atomically(dir / (s.id + ".json"), meta.dump(2) + "\n");
  }

  static void write_atomically(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      os << text;
      if (!os) throw std::runtime_error("cannot write snapshot '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
  }

  std::shared_ptr<Session> load_snapshot(const std::filesystem::path& meta_path) {
    std::ifstream mis(meta_path);
    const json meta = json::parse(mis);
    auto s = std::make_shared<Session>();
    s->id = meta.at("id").get<std::string>();
    if (s->id.size() != 16 || s->id.find_first_not_of("0123456789abcdef") != std::string::npos)
      throw FormatError("bad session id");
    s->variant = parse_variant(meta.at("game").get<std::string>());
    s->human = meta.at("human").get<std::string>() == "second" ? kSecond : kFirst;
    s->spec = parse_agent_spec(meta.at("agent"));
    s->seed = meta.at("seed").get<std::uint64_t>();
    s->agent_config = build_agent(s->spec, s->variant, cache_, options_.default_checkpoint);
    s->agent = make_agent(s->agent_config);
    s->agent->start_game(s->agent_color());
    s->board = new_game(s->variant);

    auto records_path = meta_path;
    records_path.replace_extension(".jsonl");
    std::vector<GameRecord> games;
    if (std::filesystem::exists(records_path)) {
      std::ifstream ris(records_path);
      games = read_records(ris);
    }
    ValueHistory history{{}, s->agent_color()};
    if (!games.empty())
      for (const auto& t : games.front()) {
        if (!t.move) throw FormatError("snapshot ply without a move");
        if (!t.board.same_position(s->board)) throw FormatError("snapshot board does not match replay");
        const bool by_agent = s->board.to_move() == s->agent_color();
        if (by_agent && t.dda) history.record(t.dda->v_n);
        s->boards.push_back(s->board);
        s->board = s->board.apply(*t.move);
        s->plies.push_back({by_agent, *t.move, t.dda, by_agent ? plain_sims(s->agent_config) : std::nullopt});
      }
    if (auto* dda = dynamic_cast<DdaAgent*>(s->agent.get())) dda->restore_history(history);
    if (s->board.is_terminal())
      s->status = SessionStatus::Finished;
    else
      s->status = s->board.to_move() == s->human ? SessionStatus::AwaitingHuman : SessionStatus::AwaitingAgent;
    return s;
  }

  ServiceOptions options_;
  EvaluatorCache cache_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> counter_{0};
};

}  // namespace alphadda
