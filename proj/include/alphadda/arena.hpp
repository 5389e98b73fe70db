#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "alphadda/dda.hpp"
#include "alphadda/evaluator.hpp"
#include "alphadda/game.hpp"
#include "alphadda/random.hpp"
#include "alphadda/search.hpp"

namespace alphadda {

// ---------------------------------------------------------------------------
// Agents
// ---------------------------------------------------------------------------

enum class AgentKind { AlphaZero, Dda1, Dda2, Dda3, Mcts1, Mcts2, Minimax, Random };

inline constexpr AgentKind kAllAgentKinds[] = {AgentKind::AlphaZero, AgentKind::Dda1,  AgentKind::Dda2,
                                               AgentKind::Dda3,      AgentKind::Mcts1, AgentKind::Mcts2,
                                               AgentKind::Minimax,   AgentKind::Random};

inline std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::AlphaZero: return "AlphaZero";
    case AgentKind::Dda1: return "DDA1";
    case AgentKind::Dda2: return "DDA2";
    case AgentKind::Dda3: return "DDA3";
    case AgentKind::Mcts1: return "MCTS1";
    case AgentKind::Mcts2: return "MCTS2";
    case AgentKind::Minimax: return "Minimax";
    case AgentKind::Random: return "Random";
  }
  return "?";
}

inline AgentKind parse_agent_kind(std::string_view s) {
  for (AgentKind k : kAllAgentKinds)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown agent kind '" + std::string(s) + "'");
}

inline bool uses_evaluator(AgentKind k) {
  return k == AgentKind::AlphaZero || k == AgentKind::Dda1 || k == AgentKind::Dda2 || k == AgentKind::Dda3;
}

inline bool is_dda(AgentKind k) { return k == AgentKind::Dda1 || k == AgentKind::Dda2 || k == AgentKind::Dda3; }

/// Agent selection plus its hyperparameters. `search` holds the AlphaZero
/// search settings (also the base settings of the adjusting agents).
struct AgentConfig {
  std::string name;
  AgentKind kind = AgentKind::Random;
  std::shared_ptr<const Evaluator> evaluator;
  std::string checkpoint;  // informational; the evaluator is what plays
  SearchParams search;
  DdaConfig dda;
  UctParams uct;
  MinimaxParams minimax;

  std::string label() const { return name.empty() ? to_string(kind) : name; }

  static AgentConfig make(AgentKind kind, Variant v, std::shared_ptr<const Evaluator> evaluator = nullptr) {
    AgentConfig c;
    c.kind = kind;
    c.evaluator = std::move(evaluator);
    c.search = SearchParams::defaults(v);
    if (is_dda(kind)) {
      const DdaKind dk = kind == AgentKind::Dda1 ? DdaKind::Dda1 : kind == AgentKind::Dda2 ? DdaKind::Dda2 : DdaKind::Dda3;
      c.dda = DdaConfig::defaults(dk, v);
    }
    if (kind == AgentKind::Mcts1) c.uct = UctParams::mcts1();
    if (kind == AgentKind::Mcts2) c.uct = UctParams::mcts2();
    return c;
  }
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void start_game(Color /*my_color*/) {}
  virtual Move decide(const Board& state, Rng& rng) = 0;
  virtual std::optional<DdaDiagnostics> last_diagnostics() const { return std::nullopt; }
};

class AlphaZeroAgent final : public Agent {
 public:
  explicit AlphaZeroAgent(const AgentConfig& c) : config_(c) {}
  Move decide(const Board& s, Rng& rng) override {
    return decide_move_alphazero(s, *config_.evaluator, config_.search, rng);
  }

 private:
  AgentConfig config_;
};

class DdaAgent final : public Agent {
 public:
  explicit DdaAgent(const AgentConfig& c) : config_(c) {}
  void start_game(Color my_color) override {
    history_ = ValueHistory{{}, my_color};
    last_.reset();
  }
  Move decide(const Board& s, Rng& rng) override {
    const auto d = dda_decide_move(config_.dda, s, history_, *config_.evaluator, config_.search, rng);
    last_ = d.diagnostics;
    return d.move;
  }
  std::optional<DdaDiagnostics> last_diagnostics() const override { return last_; }
  const ValueHistory& history() const { return history_; }
  void restore_history(ValueHistory h) { history_ = std::move(h); }

 private:
  AgentConfig config_;
  ValueHistory history_;
  std::optional<DdaDiagnostics> last_;
};

class UctAgent final : public Agent {
 public:
  explicit UctAgent(UctParams p) : params_(p) {}
  Move decide(const Board& s, Rng& rng) override { return decide_move_vanilla_mcts(s, params_, rng); }

 private:
  UctParams params_;
};

class MinimaxAgent final : public Agent {
 public:
  explicit MinimaxAgent(MinimaxParams p) : params_(p) {}
  Move decide(const Board& s, Rng& rng) override { return minimax_decide(s, params_, rng); }

 private:
  MinimaxParams params_;
};

class RandomAgent final : public Agent {
 public:
  Move decide(const Board& s, Rng& rng) override { return decide_move_random(s, rng); }
};

inline std::unique_ptr<Agent> make_agent(const AgentConfig& c) {
  if (uses_evaluator(c.kind) && !c.evaluator) throw std::invalid_argument(c.label() + " needs an evaluator");
  switch (c.kind) {
    case AgentKind::AlphaZero: return std::make_unique<AlphaZeroAgent>(c);
    case AgentKind::Dda1:
    case AgentKind::Dda2:
    case AgentKind::Dda3: return std::make_unique<DdaAgent>(c);
    case AgentKind::Mcts1:
    case AgentKind::Mcts2: return std::make_unique<UctAgent>(c.uct);
    case AgentKind::Minimax: return std::make_unique<MinimaxAgent>(c.minimax);
    case AgentKind::Random: return std::make_unique<RandomAgent>();
  }
  throw std::invalid_argument("unknown agent kind");
}

// ---------------------------------------------------------------------------
// Games and match series
// ---------------------------------------------------------------------------

struct PlayedGame {
  bool a_first = true;
  int winner = 0;  // disc color, 0 draw
  std::uint64_t seed = 0;
  std::vector<int> actions;
  std::vector<DdaDiagnostics> diagnostics;  // from whichever side adjusts

  /// +1 if agent A won, -1 if it lost, 0 on a draw.
  int result_for_a() const { return winner == 0 ? 0 : (winner == kFirst) == a_first ? 1 : -1; }
};

struct MatchResult {
  int wins = 0, losses = 0, draws = 0;
  std::vector<PlayedGame> games;

  int played() const { return wins + losses + draws; }
  double win_rate() const { return played() ? static_cast<double>(wins) / played() : 0.0; }
  double loss_rate() const { return played() ? static_cast<double>(losses) / played() : 0.0; }
  double draw_rate() const { return played() ? static_cast<double>(draws) / played() : 0.0; }
};

/// Plays one game; `first` moves first. Each side draws from its own stream.
inline PlayedGame play_game(const AgentConfig& first, const AgentConfig& second, Variant v, std::uint64_t seed) {
  PlayedGame g;
  g.seed = seed;
  auto p1 = make_agent(first);
  auto p2 = make_agent(second);
  p1->start_game(kFirst);
  p2->start_game(kSecond);
  Rng rng1(mix_seed(seed, 1)), rng2(mix_seed(seed, 2));
  Board state = new_game(v);
  while (!state.is_terminal()) {
    const bool first_to_move = state.to_move() == kFirst;
    Agent& agent = first_to_move ? *p1 : *p2;
    const Move m = agent.decide(state, first_to_move ? rng1 : rng2);
    if (auto d = agent.last_diagnostics(); d && is_dda((first_to_move ? first : second).kind))
      g.diagnostics.push_back(*d);
    g.actions.push_back(action_index(v, m));
    state = state.apply(m);
  }
  g.winner = *state.outcome();
  return g;
}

/// Runs fn(0..n-1) on up to `threads` workers; results must be written by index.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline int default_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

/// n_games/2 games with A first, then n_games/2 with B first. Game i uses
/// seed mix_seed(seed, i).
inline MatchResult match_series(const AgentConfig& a, const AgentConfig& b, Variant v, int n_games,
                                std::uint64_t seed, int threads = default_threads()) {
  if (n_games % 2 != 0) throw std::invalid_argument("match series needs an even number of games");
  MatchResult r;
  r.games.resize(n_games);
  parallel_for(n_games, threads, [&](int i) {
    const bool a_first = i < n_games / 2;
    const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(i));
    r.games[i] = a_first ? play_game(a, b, v, s) : play_game(b, a, v, s);
    r.games[i].a_first = a_first;
  });
  for (const auto& g : r.games) {
    const int res = g.result_for_a();
    r.wins += res > 0;
    r.losses += res < 0;
    r.draws += res == 0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Elo
// ---------------------------------------------------------------------------

inline constexpr double kEloK = 8.0;
inline constexpr double kEloInitial = 1500.0;

/// Probability that a player rated e_a beats one rated e_b.
inline double elo_expected(double e_a, double e_b) { return 1.0 / (1.0 + std::pow(10.0, (e_b - e_a) / 400.0)); }

/// e' = e_a + k (n_win - n_games p). Draws count half a win.
inline double elo_update(double e_a, double n_win, int n_games, double p, double k = kEloK) {
  return e_a + k * (n_win - n_games * p);
}

struct EloTable {
  std::vector<std::string> agents;
  std::vector<double> ratings;
  double k = kEloK;

  explicit EloTable(std::vector<std::string> names = {}, double k_factor = kEloK)
      : agents(std::move(names)), ratings(agents.size(), kEloInitial), k(k_factor) {}

  double rating(const std::string& name) const {
    for (std::size_t i = 0; i < agents.size(); ++i)
      if (agents[i] == name) return ratings[i];
    throw std::out_of_range("no rating for " + name);
  }

  double total() const { return std::accumulate(ratings.begin(), ratings.end(), 0.0); }

  /// Per-game update; `score_a` is 1, 0.5 or 0. Both sides move by the same
  /// amount in opposite directions.
  void record(std::size_t a, std::size_t b, double score_a) {
    const double p = elo_expected(ratings[a], ratings[b]);
    const double delta = elo_update(ratings[a], score_a, 1, p, k) - ratings[a];
    ratings[a] += delta;
    ratings[b] -= delta;
  }
};

inline double score_of(int result) { return result > 0 ? 1.0 : result < 0 ? 0.0 : 0.5; }

struct RoundRobinResult {
  EloTable table;
  // One entry per game in the order the ratings were updated.
  struct Entry {
    int round, first, second, winner;
  };
  std::vector<Entry> log;
};

/// Each round plays every ordered pair (i first, j second) once; ratings are
/// updated game by game in round/pair order.
inline RoundRobinResult round_robin(const std::vector<AgentConfig>& agents, Variant v, int n_rounds,
                                    std::uint64_t seed, int threads = default_threads()) {
  if (agents.size() < 2) throw std::invalid_argument("round robin needs at least two agents");
  std::vector<std::string> names;
  for (const auto& a : agents) names.push_back(a.label());
  RoundRobinResult out{EloTable(names), {}};
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < static_cast<int>(agents.size()); ++i)
    for (int j = 0; j < static_cast<int>(agents.size()); ++j)
      if (i != j) pairs.emplace_back(i, j);
  const int per_round = static_cast<int>(pairs.size());
  std::vector<int> winners(static_cast<std::size_t>(per_round) * n_rounds);
  parallel_for(static_cast<int>(winners.size()), threads, [&](int g) {
    const auto [i, j] = pairs[g % per_round];
    winners[g] = play_game(agents[i], agents[j], v, mix_seed(seed, static_cast<std::uint64_t>(g))).winner;
  });
  for (int g = 0; g < static_cast<int>(winners.size()); ++g) {
    const auto [i, j] = pairs[g % per_round];
    out.table.record(i, j, score_of(winners[g]));
    out.log.push_back({g / per_round, i, j, winners[g]});
  }
  return out;
}

struct RatedOpponent {
  AgentConfig agent;
  double rating = kEloInitial;
};

struct FixedRatingResult {
  double rating = kEloInitial;
  std::vector<MatchResult> per_opponent;
};

/// Subject starts at 1500 and is updated after every game against opponents
/// whose ratings stay frozen; opponents are visited in list order.
inline FixedRatingResult fixed_opponent_rating(const AgentConfig& subject, const std::vector<RatedOpponent>& opponents,
                                               Variant v, int n_games, std::uint64_t seed,
                                               int threads = default_threads()) {
  FixedRatingResult out;
  for (std::size_t o = 0; o < opponents.size(); ++o) {
    auto m = match_series(subject, opponents[o].agent, v, n_games, mix_seed(seed, o), threads);
    for (const auto& g : m.games) {
      const double p = elo_expected(out.rating, opponents[o].rating);
      out.rating = elo_update(out.rating, score_of(g.result_for_a()), 1, p);
    }
    out.per_opponent.push_back(std::move(m));
  }
  return out;
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0 + 1.0;
      i = j + 1;
    }
    return r;
  };
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs two equal-length series");
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

// ---------------------------------------------------------------------------
// Parameter sweeps and grid search
// ---------------------------------------------------------------------------

/// Sets a named hyperparameter on an agent config. Names: n_sim (the UCT
/// budget for MCTS agents), depth, c_puct, p_drop, n_h, a_sim, b_sim0, n_max,
/// a_drop, p_drop0, c_explore.
inline void set_parameter(AgentConfig& a, const std::string& name, double value) {
  const int n = static_cast<int>(std::lround(value));
  if (name == "n_sim") {
    if (a.kind == AgentKind::Mcts1 || a.kind == AgentKind::Mcts2)
      a.uct.n_sim = n;
    else
      a.search.n_sim = n;
  } else if (name == "depth") {
    a.minimax.depth = n;
  } else if (name == "c_puct") {
    a.search.c_puct = value;
  } else if (name == "p_drop") {
    a.search.p_drop = value;
  } else if (name == "n_h") {
    a.dda.dda1.n_h = a.dda.dda2.n_h = a.dda.dda3.n_h = n;
  } else if (name == "a_sim") {
    a.dda.dda1.a_sim = value;
  } else if (name == "b_sim0") {
    a.dda.dda1.b_sim0 = value;
  } else if (name == "n_max") {
    a.dda.dda1.n_max = n;
  } else if (name == "a_drop") {
    a.dda.dda2.a_drop = value;
  } else if (name == "p_drop0") {
    a.dda.dda2.p_drop0 = value;
  } else if (name == "c_explore") {
    a.dda.dda3.c_explore = value;
  } else {
    throw std::invalid_argument("unknown parameter '" + name + "'");
  }
}

struct SweepPoint {
  double value = 0.0;
  double rating = 0.0;
  std::vector<MatchResult> per_opponent;
};

inline std::vector<SweepPoint> parameter_sweep(const AgentConfig& subject, const std::string& param,
                                               const std::vector<double>& values,
                                               const std::vector<RatedOpponent>& opponents, Variant v, int n_games,
                                               std::uint64_t seed, int threads = default_threads()) {
  std::vector<SweepPoint> out;
  for (double x : values) {
    AgentConfig s = subject;
    set_parameter(s, param, x);
    auto r = fixed_opponent_rating(s, opponents, v, n_games, seed, threads);
    out.push_back({x, r.rating, std::move(r.per_opponent)});
  }
  return out;
}

using MatchRunner = std::function<MatchResult(const AgentConfig& subject, const AgentConfig& opponent, int n_games,
                                              std::uint64_t seed)>;

struct GridCell {
  std::vector<std::pair<std::string, double>> params;
  std::vector<std::string> opponents;
  std::vector<MatchResult> results;
  double objective = 0.0;
};

struct GridSearchResult {
  std::vector<GridCell> cells;
  std::size_t best = 0;
  const GridCell& best_cell() const { return cells.at(best); }
};

/// Sum over opponents of |win rate - loss rate|.
inline double balance_objective(const std::vector<MatchResult>& results) {
  double s = 0.0;
  for (const auto& r : results) s += std::abs(r.win_rate() - r.loss_rate());
  return s;
}

/// Cartesian product of `grid`; every cell plays each opponent and the cell
/// with the smallest balance objective wins (first one on ties).
inline GridSearchResult grid_search(const AgentConfig& subject,
                                    const std::vector<std::pair<std::string, std::vector<double>>>& grid,
                                    const std::vector<AgentConfig>& opponents, int n_games_per_cell,
                                    std::uint64_t seed, const MatchRunner& runner) {
  if (grid.empty()) throw std::invalid_argument("empty grid");
  for (const auto& [name, values] : grid)
    if (values.empty()) throw std::invalid_argument("empty range for '" + name + "'");
  GridSearchResult out;
  std::vector<std::size_t> idx(grid.size(), 0);
  for (std::size_t cell_no = 0;; ++cell_no) {
    GridCell cell;
    AgentConfig s = subject;
    for (std::size_t d = 0; d < grid.size(); ++d) {
      cell.params.emplace_back(grid[d].first, grid[d].second[idx[d]]);
      set_parameter(s, grid[d].first, grid[d].second[idx[d]]);
    }
    for (std::size_t o = 0; o < opponents.size(); ++o) {
      cell.opponents.push_back(opponents[o].label());
      cell.results.push_back(runner(s, opponents[o], n_games_per_cell, mix_seed(seed, o)));
    }
    cell.objective = balance_objective(cell.results);
    out.cells.push_back(std::move(cell));
    std::size_t d = 0;
    while (d < grid.size() && ++idx[d] == grid[d].second.size()) idx[d++] = 0;
    if (d == grid.size()) break;
  }
  for (std::size_t i = 1; i < out.cells.size(); ++i)
    if (out.cells[i].objective < out.cells[out.best].objective) out.best = i;
  return out;
}

inline GridSearchResult grid_search(const AgentConfig& subject,
                                    const std::vector<std::pair<std::string, std::vector<double>>>& grid,
                                    const std::vector<AgentConfig>& opponents, Variant v, int n_games_per_cell,
                                    std::uint64_t seed, int threads = default_threads()) {
  return grid_search(subject, grid, opponents, n_games_per_cell, seed,
                     [&](const AgentConfig& s, const AgentConfig& o, int n, std::uint64_t sd) {
                       return match_series(s, o, v, n, sd, threads);
                     });
}

// ---------------------------------------------------------------------------
// CSV reports
// ---------------------------------------------------------------------------

inline void write_elo_csv(std::ostream& os, const EloTable& t) {
  os << std::setprecision(10) << "agent,rating\n";
  for (std::size_t i = 0; i < t.agents.size(); ++i) os << t.agents[i] << ',' << t.ratings[i] << '\n';
}

inline void write_match_table_csv(std::ostream& os, const std::vector<std::pair<std::string, MatchResult>>& rows) {
  os << "opponent,win,loss,draw\n";
  for (const auto& [name, r] : rows) os << name << ',' << r.win_rate() << ',' << r.loss_rate() << ',' << r.draw_rate() << '\n';
}

inline void write_match_games_csv(std::ostream& os, const MatchResult& r) {
  os << "game,a_first,winner,result_for_a,plies,seed\n";
  for (std::size_t i = 0; i < r.games.size(); ++i) {
    const auto& g = r.games[i];
    os << i << ',' << (g.a_first ? 1 : 0) << ',' << g.winner << ',' << g.result_for_a() << ',' << g.actions.size()
       << ',' << g.seed << '\n';
  }
}

inline void write_sweep_csv(std::ostream& os, const std::string& param, const std::vector<SweepPoint>& pts) {
  os << std::setprecision(10) << "param,value,rating\n";
  for (const auto& p : pts) os << param << ',' << p.value << ',' << p.rating << '\n';
}

inline void write_grid_csv(std::ostream& os, const GridSearchResult& g) {
  if (g.cells.empty()) return;
  os << "cell";
  for (const auto& [name, _] : g.cells.front().params) os << ',' << name;
  os << ",opponent,win,loss,draw,objective\n";
  for (std::size_t c = 0; c < g.cells.size(); ++c) {
    const auto& cell = g.cells[c];
    for (std::size_t o = 0; o < cell.results.size(); ++o) {
      os << c;
      for (const auto& [_, value] : cell.params) os << ',' << value;
      const auto& r = cell.results[o];
      os << ',' << cell.opponents[o] << ',' << r.win_rate() << ',' << r.loss_rate() << ',' << r.draw_rate() << ','
         << cell.objective << '\n';
    }
  }
}

}  // namespace alphadda
