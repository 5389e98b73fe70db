#include <gtest/gtest.h>

#include <sstream>

#include "alphadda/arena.hpp"

using namespace alphadda;

namespace {

AgentConfig agent(AgentKind k, Variant v = Variant::Connect4) {
  return AgentConfig::make(k, v, std::make_shared<HeuristicEvaluator>());
}

MatchResult scripted(int w, int l, int d) {
  MatchResult r;
  r.wins = w;
  r.losses = l;
  r.draws = d;
  return r;
}

TEST(Elo, Expected) {
  EXPECT_EQ(elo_expected(1500, 1500), 0.5);
  EXPECT_NEAR(elo_expected(1978, 930.6), 0.9976, 1e-4);
  EXPECT_NEAR(elo_expected(1900, 1500), 10.0 / 11.0, 1e-12);
  for (double a : {800.0, 1500.0, 2100.0})
    for (double b : {930.6, 1731.0})
      EXPECT_NEAR(elo_expected(a, b) + elo_expected(b, a), 1.0, 1e-15);
}

TEST(Elo, Update) {
  EXPECT_EQ(elo_update(1500, 1, 1, elo_expected(1500, 1500)), 1504.0);
  EXPECT_EQ(elo_update(1600, 10 * 0.3, 10, 0.3), 1600.0);
}

TEST(Elo, TableIsZeroSum) {
  EloTable t({"a", "b", "c"});
  t.record(0, 1, 1.0);
  EXPECT_EQ(t.rating("a"), 1504.0);
  EXPECT_EQ(t.rating("b"), 1496.0);
  t.record(1, 2, 0.5);
  t.record(2, 0, 0.0);
  EXPECT_NEAR(t.total(), 4500.0, 1e-9);
  EXPECT_THROW(t.rating("zz"), std::out_of_range);
}

TEST(AgentKind, RoundTrip) {
  for (AgentKind k : {AgentKind::AlphaZero, AgentKind::Dda1, AgentKind::Dda2, AgentKind::Dda3, AgentKind::Mcts1,
                      AgentKind::Mcts2, AgentKind::Minimax, AgentKind::Random})
    EXPECT_EQ(parse_agent_kind(to_string(k)), k);
  EXPECT_THROW(parse_agent_kind("Stockfish"), std::invalid_argument);
}

TEST(AgentConfig, EvaluatorRequired) {
  EXPECT_THROW(make_agent(AgentConfig::make(AgentKind::Dda1, Variant::Connect4)), std::invalid_argument);
  EXPECT_NO_THROW(make_agent(AgentConfig::make(AgentKind::Mcts2, Variant::Connect4)));
  EXPECT_EQ(AgentConfig::make(AgentKind::Mcts1, Variant::Othello6).uct.n_sim, 300);
  EXPECT_EQ(AgentConfig::make(AgentKind::Dda1, Variant::Othello8).dda.dda1.n_max, 400);
}

TEST(MatchSeries, RandomBookkeeping) {
  const auto r = match_series(agent(AgentKind::Random), agent(AgentKind::Random), Variant::Connect4, 100, 1);
  EXPECT_EQ(r.wins + r.losses + r.draws, 100);
  int first = 0;
  for (const auto& g : r.games) first += g.a_first;
  EXPECT_EQ(first, 50);
  EXPECT_THROW(match_series(agent(AgentKind::Random), agent(AgentKind::Random), Variant::Connect4, 3, 1),
               std::invalid_argument);
}

TEST(MatchSeries, ResultsMatchReplayedGames) {
  const auto r = match_series(agent(AgentKind::Random), agent(AgentKind::Random), Variant::Othello6, 10, 2);
  for (const auto& g : r.games) {
    Board b = new_game(Variant::Othello6);
    for (int a : g.actions) b = b.apply(action_move(Variant::Othello6, a));
    ASSERT_TRUE(b.is_terminal());
    EXPECT_EQ(*b.outcome(), g.winner);
  }
}

TEST(MatchSeries, Mcts1BeatsRandom) {
  const auto r = match_series(agent(AgentKind::Mcts1), agent(AgentKind::Random), Variant::Connect4, 100, 3);
  EXPECT_GE(r.win_rate(), 0.9);
}

TEST(MatchSeries, Reproducible) {
  const auto a = agent(AgentKind::Mcts2), b = agent(AgentKind::Minimax);
  const auto r1 = match_series(a, b, Variant::Connect4, 6, 4, 1);
  const auto r2 = match_series(a, b, Variant::Connect4, 6, 4, 3);
  ASSERT_EQ(r1.games.size(), r2.games.size());
  for (std::size_t i = 0; i < r1.games.size(); ++i) EXPECT_EQ(r1.games[i].actions, r2.games[i].actions);
  EXPECT_EQ(r1.wins, r2.wins);
}

TEST(MatchSeries, DdaDiagnosticsRecorded) {
  const auto r = match_series(agent(AgentKind::Dda1), agent(AgentKind::Random), Variant::Connect4, 2, 5);
  for (const auto& g : r.games) {
    const std::size_t dda_turns = g.a_first ? (g.actions.size() + 1) / 2 : g.actions.size() / 2;
    EXPECT_EQ(g.diagnostics.size(), dda_turns);
    for (const auto& d : g.diagnostics) EXPECT_TRUE(d.n_sim.has_value());
  }
}

TEST(RoundRobin, ConservesRatingMass) {
  const auto rr = round_robin({agent(AgentKind::Random), agent(AgentKind::Minimax), agent(AgentKind::Mcts2)},
                              Variant::Connect4, 2, 6);
  EXPECT_NEAR(rr.table.total(), 4500.0, 1e-9);
  EXPECT_EQ(rr.log.size(), 12u);
  EXPECT_LT(rr.table.rating("Random"), 1500.0);
}

TEST(RoundRobin, IdenticalAgentsStayClose) {
  AgentConfig a = agent(AgentKind::Random), b = agent(AgentKind::Random);
  a.name = "R1";
  b.name = "R2";
  const auto rr = round_robin({a, b}, Variant::Connect4, 50, 7);
  for (double r : rr.table.ratings) EXPECT_NEAR(r, 1500.0, 60.0);
  EXPECT_EQ(rr.table.total(), 3000.0);
}

TEST(FixedOpponent, SelfConsistent) {
  const auto r = fixed_opponent_rating(agent(AgentKind::Random), {{agent(AgentKind::Random), 1500.0}},
                                       Variant::Connect4, 50, 8);
  EXPECT_NEAR(r.rating, 1500.0, 100.0);
  ASSERT_EQ(r.per_opponent.size(), 1u);
  EXPECT_EQ(r.per_opponent[0].played(), 50);
}

TEST(FixedOpponent, LosingSubjectFallsBelow) {
  const std::vector<RatedOpponent> opps{{agent(AgentKind::Minimax), 1500.0}, {agent(AgentKind::Mcts1), 1600.0}};
  const auto r = fixed_opponent_rating(agent(AgentKind::Random), opps, Variant::Connect4, 10, 9);
  for (const auto& o : opps) EXPECT_LT(r.rating, o.rating);
}

TEST(Spearman, Basic) {
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-12);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-12);
  EXPECT_NEAR(spearman({1, 2, 3, 4, 5}, {1, 3, 2, 4, 5}), 0.9, 1e-12);
  EXPECT_THROW(spearman({1}, {1}), std::invalid_argument);
}

TEST(SetParameter, KnownAndUnknown) {
  AgentConfig a = agent(AgentKind::Dda1);
  set_parameter(a, "a_sim", 3.5);
  set_parameter(a, "n_h", 7);
  set_parameter(a, "n_sim", 12);
  EXPECT_EQ(a.dda.dda1.a_sim, 3.5);
  EXPECT_EQ(a.dda.n_h(), 7);
  EXPECT_EQ(a.search.n_sim, 12);
  EXPECT_THROW(set_parameter(a, "gamma", 1), std::invalid_argument);
}

TEST(GridSearch, SingletonGrid) {
  const auto g = grid_search(agent(AgentKind::Dda1), {{"a_sim", {2.0}}}, {agent(AgentKind::Random)}, 4, 1,
                             [](const AgentConfig&, const AgentConfig&, int n, std::uint64_t) { return scripted(n, 0, 0); });
  ASSERT_EQ(g.cells.size(), 1u);
  EXPECT_EQ(g.best, 0u);
  EXPECT_EQ(g.best_cell().objective, 1.0);
}

TEST(GridSearch, DrawingCellWins) {
  const MatchRunner runner = [](const AgentConfig& s, const AgentConfig&, int n, std::uint64_t) {
    if (s.dda.dda1.a_sim == 3.0 && s.dda.dda1.b_sim0 == -1.0) return scripted(0, 0, n);
    return scripted(n / 2 + 1, n / 2 - 1, 0);
  };
  const auto g = grid_search(agent(AgentKind::Dda1), {{"a_sim", {1.0, 2.0, 3.0}}, {"b_sim0", {-1.4, -1.0}}},
                             {agent(AgentKind::Random), agent(AgentKind::Minimax)}, 10, 2, runner);
  ASSERT_EQ(g.cells.size(), 6u);
  EXPECT_EQ(g.best_cell().objective, 0.0);
  EXPECT_EQ(g.best_cell().params[0].second, 3.0);
  EXPECT_EQ(g.best_cell().params[1].second, -1.0);
  for (const auto& c : g.cells) EXPECT_NEAR(c.objective, balance_objective(c.results), 1e-12);
  EXPECT_THROW(grid_search(agent(AgentKind::Dda1), {}, {}, 2, 1, runner), std::invalid_argument);
  EXPECT_THROW(grid_search(agent(AgentKind::Dda1), {{"a_sim", {}}}, {}, 2, 1, runner), std::invalid_argument);
}

TEST(GridSearch, RealMatchesSmoke) {
  const auto g = grid_search(agent(AgentKind::Dda1), {{"n_max", {1.0, 20.0}}}, {agent(AgentKind::Random)},
                             Variant::Connect4, 2, 3, 1);
  ASSERT_EQ(g.cells.size(), 2u);
  for (const auto& c : g.cells) EXPECT_EQ(c.results[0].played(), 2);
}

TEST(Csv, Layouts) {
  EloTable t({"AlphaZero", "Random"});
  t.record(0, 1, 1.0);
  std::ostringstream elo;
  write_elo_csv(elo, t);
  EXPECT_EQ(elo.str(), "agent,rating\nAlphaZero,1504\nRandom,1496\n");

  std::ostringstream tab;
  write_match_table_csv(tab, {{"Minimax", scripted(24, 16, 0)}});
  EXPECT_EQ(tab.str(), "opponent,win,loss,draw\nMinimax,0.6,0.4,0\n");

  std::ostringstream sweep;
  write_sweep_csv(sweep, "n_sim", {{10, 1512.5, {}}});
  EXPECT_EQ(sweep.str(), "param,value,rating\nn_sim,10,1512.5\n");

  GridSearchResult g;
  g.cells.push_back({{{"a_sim", 2.0}}, {"Random"}, {scripted(1, 1, 0)}, 0.0});
  std::ostringstream grid;
  write_grid_csv(grid, g);
  EXPECT_EQ(grid.str(), "cell,a_sim,opponent,win,loss,draw,objective\n0,2,Random,0.5,0.5,0,0\n");
}

}  // namespace
