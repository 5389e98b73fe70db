#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "alphadda/http_service.hpp"

using namespace alphadda;

namespace {

json request(const std::string& game, const json& agent, const std::string& seat, std::uint64_t seed = 1) {
  return {{"game", game}, {"agent", agent}, {"human", seat}, {"seed", seed}};
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("alphadda_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

int first_legal(const json& view) { return view.at("legal_moves").at(0).at("action").get<int>(); }

// ---------------------------------------------------------------------------
// Run configs

TEST(RunConfig, DefaultsFollowPreset) {
  const auto desk = parse_run_config({{"game", "othello8"}});
  EXPECT_EQ(desk.game, Variant::Othello8);
  EXPECT_EQ(desk.network, NetworkConfig::desk(Variant::Othello8));
  EXPECT_EQ(desk.train.n_iter, TrainConfig::desk(Variant::Othello8).n_iter);
  const auto paper = parse_run_config({{"game", "othello8"}, {"preset", "desk"}}, Preset::Paper);
  EXPECT_EQ(paper.network.blocks, 5);
  EXPECT_EQ(paper.train.n_sim, 400);
}

TEST(RunConfig, OverridesApply) {
  const auto c = parse_run_config({{"train", {{"n_iter", 3}, {"learning_rate", 0.05}}}, {"network", {{"filters", 8}}}});
  EXPECT_EQ(c.train.n_iter, 3);
  EXPECT_EQ(c.train.learning_rate, 0.05);
  EXPECT_EQ(c.network.filters, 8);
}

TEST(RunConfig, UnknownKeysRejected) {
  auto message = [](const json& j) {
    try {
      parse_run_config(j);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message({{"gmae", "connect4"}}).find("gmae"), std::string::npos);
  EXPECT_NE(message({{"train", {{"n_iters", 3}}}}).find("n_iters"), std::string::npos);
  EXPECT_NE(message({{"agents", {{{"kind", "DDA1"}, {"param", json::object()}}}}}).find("param"), std::string::npos);
  EXPECT_NE(message({{"game", "chess"}}).find("game"), std::string::npos);
  EXPECT_NE(message({{"agents", {{{"kind", "Stockfish"}}}}}).find("Stockfish"), std::string::npos);
  EXPECT_NE(message({{"agents", {{{"kind", "DDA1"}, {"params", {{"gamma", 1}}}}}}}).find("gamma"), std::string::npos);
  EXPECT_NE(message({{"agents", {"Random", "Random"}}}).find("duplicate"), std::string::npos);
  EXPECT_NE(message({{"agents", {"Random"}}, {"match", {{"a", "Random"}, {"b", "Minimax"}}}}).find("Minimax"),
            std::string::npos);
}

TEST(RunConfig, Sections) {
  const json j = {{"agents", {"Random", "Minimax", {{"kind", "AlphaZero"}, {"name", "AZ"}, {"params", {{"n_sim", 5}}}}}},
                  {"match", {{"a", "Random"}, {"b", "Minimax"}, {"games", 10}}},
                  {"elo", {{"rounds", 3}}},
                  {"sweep", {{"subject", "AZ"}, {"values", {1, 10}}, {"opponents", {{{"agent", "Random"}, {"rating", 930.6}}}}}},
                  {"gridsearch", {{"subject", "AZ"}, {"grid", {{"c_puct", {1.0, 2.0}}}}, {"opponents", {"Random"}}}}};
  const auto c = parse_run_config(j);
  ASSERT_EQ(c.agents.size(), 3u);
  EXPECT_EQ(c.agent("AZ").params.at(0).second, 5.0);
  EXPECT_EQ(c.match->games, 10);
  EXPECT_EQ(c.elo->rounds, 3);
  EXPECT_EQ(c.sweep->opponents.at(0).rating, 930.6);
  EXPECT_EQ(c.gridsearch->grid.at(0).second.size(), 2u);
  EXPECT_EQ(c.gridsearch->opponents, std::vector<std::string>{"Random"});
  json defaults = j;
  defaults["gridsearch"].erase("opponents");
  EXPECT_EQ(parse_run_config(defaults).gridsearch->opponents, std::vector<std::string>{"Minimax"});
  defaults["gridsearch"]["include_random"] = true;
  EXPECT_EQ(parse_run_config(defaults).gridsearch->opponents, (std::vector<std::string>{"Random", "Minimax"}));
  EXPECT_THROW(parse_run_config({{"agents", {"Random"}}, {"match", {{"a", "Random"}, {"b", "Random"}, {"games", 3}}}}),
               ConfigError);
}

TEST(AgentSpec, BuildsEvaluators) {
  EvaluatorCache cache;
  const auto h = build_agent(parse_agent_spec(json{{"kind", "DDA2"}}), Variant::Connect4, cache);
  EXPECT_NE(dynamic_cast<const HeuristicEvaluator*>(h.evaluator.get()), nullptr);
  EXPECT_EQ(h.dda.kind, DdaKind::Dda2);

  const auto dir = scratch("spec");
  const std::string ckpt = (dir / "c4.adda").string();
  save_checkpoint(ckpt, Network({Variant::Connect4, 1, 4, 3, 8, 8, 1}, 1), 0, 1);
  const auto n = build_agent(parse_agent_spec(json{{"kind", "DDA1"}}), Variant::Connect4, cache, ckpt);
  EXPECT_NE(dynamic_cast<const NetworkEvaluator*>(n.evaluator.get()), nullptr);
  EXPECT_EQ(cache.network(ckpt), n.evaluator);
  EXPECT_THROW(build_agent(parse_agent_spec(json{{"kind", "DDA1"}}), Variant::Othello6, cache, ckpt), ConfigError);

  const std::string missing = (dir / "missing.adda").string();
  try {
    build_agent(parse_agent_spec(json{{"kind", "AlphaZero"}, {"checkpoint", missing}}), Variant::Connect4, cache);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(missing), std::string::npos);
  }
  EXPECT_THROW(build_agent(parse_agent_spec(json{{"kind", "AlphaZero"}, {"evaluator", "network"}}), Variant::Connect4,
                           cache),
               ConfigError);
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Sessions

ServiceOptions sync_options(const std::string& dir = "") {
  ServiceOptions o;
  o.async = false;
  o.snapshot_dir = dir;
  return o;
}

const json kFastDda1 = {{"kind", "DDA1"}, {"params", {{"n_max", 20}}}};

TEST(Session, HumanFirstStartsEmpty) {
  SessionManager m(sync_options());
  const auto v = m.create(request("connect4", kFastDda1, "first"));
  EXPECT_EQ(v.at("status"), "AwaitingHuman");
  EXPECT_EQ(v.at("board").at(5), ".......");
  EXPECT_EQ(v.at("legal_moves").size(), 7u);
  EXPECT_TRUE(v.at("diagnostics").empty());
  EXPECT_EQ(v.at("human"), "X");
  EXPECT_EQ(v.at("agent").at("knob"), "n_sim");
}

TEST(Session, HumanSecondSeesAgentMove) {
  SessionManager m(sync_options());
  const auto v = m.create(request("othello8", {{"kind", "DDA2"}}, "second"));
  EXPECT_EQ(v.at("status"), "AwaitingHuman");
  EXPECT_EQ(v.at("moves").size(), 1u);
  EXPECT_EQ(v.at("diagnostics").size(), 1u);
  EXPECT_TRUE(v.at("diagnostics").at(0).at("p_drop").is_number());
  EXPECT_EQ(v.at("turn"), 1);
}

TEST(Session, RejectsBadRequests) {
  SessionManager m(sync_options());
  auto status_of = [&](const json& r) {
    try {
      m.create(r);
    } catch (const ServiceError& e) {
      return e.status();
    }
    return 0;
  };
  EXPECT_EQ(status_of(request("connect4", {{"kind", "Stockfish"}}, "first")), 400);
  EXPECT_EQ(status_of(request("chess", "Random", "first")), 400);
  EXPECT_EQ(status_of(request("connect4", "Random", "middle")), 400);
  EXPECT_EQ(status_of({{"game", "connect4"}, {"agent", "Random"}, {"colour", "first"}}), 400);
  EXPECT_EQ(m.size(), 0u);
}

TEST(Session, MoveReplyAndDiagnostics) {
  SessionManager m(sync_options());
  const std::string id = m.create(request("connect4", kFastDda1, "first")).at("id");
  const auto v = m.play(id, {{"col", 3}});
  EXPECT_EQ(v.at("moves").size(), 2u);
  EXPECT_EQ(v.at("moves").at(1).at("by"), "agent");
  ASSERT_EQ(v.at("diagnostics").size(), 1u);
  const auto& d = v.at("diagnostics").at(0);
  EXPECT_TRUE(d.at("v_n").is_number());
  EXPECT_TRUE(d.at("v_bar").is_number());
  EXPECT_TRUE(d.at("n_sim").is_number());
  EXPECT_EQ(v.at("status"), "AwaitingHuman");
}

// Writes a snapshot whose column 0 is already full (alternating colors).
void write_full_column_snapshot(const std::filesystem::path& dir, const std::string& id) {
  GameRecord rec;
  Board b = new_game(Variant::Connect4);
  for (int i = 0; i < 6; ++i) {
    rec.push_back({b, {}, 0, Move::drop(0), std::nullopt});
    b = b.apply(Move::drop(0));
  }
  std::ofstream(dir / (id + ".jsonl")) << [&] {
    std::ostringstream os;
    write_records(os, {rec});
    return os.str();
  }();
  std::ofstream(dir / (id + ".json"))
      << json{{"id", id}, {"game", "connect4"}, {"human", "first"}, {"agent", {{"kind", "Random"}}}, {"seed", 1}}.dump();
}

TEST(Session, IllegalMoveListsLegalOnes) {
  const auto dir = scratch("full_column");
  const std::string id = "00000000000000aa";
  write_full_column_snapshot(dir, id);
  SessionManager m(sync_options(dir.string()));
  ASSERT_EQ(m.restore(), 1u);
  EXPECT_EQ(m.get(id).at("board").at(0), "O......");
  try {
    m.play(id, {{"col", 0}});
    FAIL() << "full column accepted";
  } catch (const ServiceError& e) {
    EXPECT_EQ(e.status(), 400);
    ASSERT_EQ(e.body().at("legal_moves").size(), 6u);
    for (const auto& mv : e.body().at("legal_moves")) {
      EXPECT_EQ(mv.at("kind"), "drop");
      EXPECT_NE(mv.at("col"), 0);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(Session, OutOfTurnAndUnknownSession) {
  ServiceOptions o;  // async: the agent is still thinking after create
  SessionManager m(o);
  const json slow = {{"kind", "AlphaZero"}, {"params", {{"n_sim", 20000}}}};
  const std::string id = m.create(request("connect4", slow, "second")).at("id");
  EXPECT_EQ(m.get(id).at("status"), "AwaitingAgent");
  try {
    m.play(id, {{"col", 0}});
    FAIL() << "move accepted while the agent was thinking";
  } catch (const ServiceError& e) {
    EXPECT_EQ(e.status(), 409);
  }
  m.wait(id);
  EXPECT_EQ(m.get(id).at("status"), "AwaitingHuman");
  EXPECT_THROW(m.get("0000000000000000"), ServiceError);
}

TEST(Session, WinningHumanMoveFinishes) {
  // Random human against a random agent until the game ends.
  SessionManager m(sync_options());
  const std::string id = m.create(request("connect4", "Random", "first", 3)).at("id");
  json v = m.get(id);
  Rng rng(4);
  while (v.at("status") == "AwaitingHuman") {
    const auto& legal = v.at("legal_moves");
    v = m.play(id, {{"action", legal.at(uniform_index(rng, static_cast<int>(legal.size()))).at("action")}});
  }
  EXPECT_EQ(v.at("status"), "Finished");
  EXPECT_TRUE(v.at("legal_moves").empty());
  EXPECT_TRUE(v.at("to_move").is_null());
  // Replaying the log reproduces the final board.
  Board b = new_game(Variant::Connect4);
  for (const auto& mv : v.at("moves")) b = b.apply(action_move(Variant::Connect4, mv.at("action")));
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 7; ++c) EXPECT_EQ(Board::cell_char(b.at(r, c)), v.at("board").at(r).get<std::string>()[c]);
  EXPECT_EQ(v.at("winner"), color_char(*b.outcome()));
  const auto last = v.at("moves").back();
  if (last.at("by") == "human") {
    EXPECT_EQ(v.at("winner"), b.outcome() == 0 ? "draw" : "X");
  }
}

TEST(Session, HumanPassInOthello) {
  SessionManager m(sync_options());
  bool saw_pass = false;
  for (std::uint64_t seed = 1; seed < 400 && !saw_pass; ++seed) {
    const std::string id = m.create(request("othello6", "Random", "first", seed)).at("id");
    json v = m.get(id);
    Rng rng(seed);
    while (v.at("status") == "AwaitingHuman") {
      const auto& legal = v.at("legal_moves");
      if (legal.size() == 1 && legal.at(0).at("kind") == "pass") {
        saw_pass = true;
        const std::size_t ply = v.at("moves").size();
        v = m.play(id, {{"pass", true}});
        EXPECT_EQ(v.at("moves").at(ply).at("kind"), "pass");
        EXPECT_EQ(v.at("moves").at(ply).at("by"), "human");
      } else {
        v = m.play(id, {{"action", legal.at(uniform_index(rng, static_cast<int>(legal.size()))).at("action")}});
      }
    }
    EXPECT_EQ(v.at("status"), "Finished");
  }
  EXPECT_TRUE(saw_pass);
}

TEST(Session, DiagnosticsOnePerAgentTurn) {
  SessionManager m(sync_options());
  const std::string id = m.create(request("connect4", kFastDda1, "second")).at("id");
  json v = m.get(id);
  for (int i = 0; i < 5 && v.at("status") == "AwaitingHuman"; ++i) v = m.play(id, {{"action", first_legal(v)}});
  int agent_moves = 0;
  for (const auto& mv : v.at("moves")) agent_moves += mv.at("by") == "agent";
  EXPECT_EQ(static_cast<int>(v.at("diagnostics").size()), agent_moves);
}

TEST(Session, SnapshotRestoreReplaysLog) {
  const auto dir = scratch("snapshots");
  std::string id;
  json before;
  {
    SessionManager m(sync_options(dir.string()));
    id = m.create(request("connect4", kFastDda1, "first", 5)).at("id").get<std::string>();
    m.play(id, {{"col", 3}});
    before = m.play(id, {{"col", 4}});
  }
  EXPECT_TRUE(std::filesystem::exists(dir / (id + ".json")));
  EXPECT_TRUE(std::filesystem::exists(dir / (id + ".jsonl")));

  SessionManager restored(sync_options(dir.string()));
  std::vector<std::string> problems;
  EXPECT_EQ(restored.restore(&problems), 1u);
  EXPECT_TRUE(problems.empty());
  const auto after = restored.get(id);
  EXPECT_EQ(after.at("board"), before.at("board"));
  EXPECT_EQ(after.at("moves"), before.at("moves"));
  EXPECT_EQ(after.at("diagnostics"), before.at("diagnostics"));
  EXPECT_EQ(after.at("status"), "AwaitingHuman");

  // The restored agent continues exactly as the original would have.
  SessionManager fresh(sync_options());
  const std::string id2 = fresh.create(request("connect4", kFastDda1, "first", 5)).at("id");
  fresh.play(id2, {{"col", 3}});
  fresh.play(id2, {{"col", 4}});
  EXPECT_EQ(restored.play(id, {{"col", 2}}).at("moves"), fresh.play(id2, {{"col", 2}}).at("moves"));

  std::ofstream(dir / "broken.json") << "{";
  SessionManager again(sync_options(dir.string()));
  problems.clear();
  EXPECT_EQ(again.restore(&problems), 1u);
  EXPECT_EQ(problems.size(), 1u);
  std::filesystem::remove_all(dir);
}

TEST(Session, ConcurrentSessionsIndependent) {
  SessionManager m;  // async
  const std::string slow = m.create(request("othello8", {{"kind", "AlphaZero"}, {"params", {{"n_sim", 3000}}}}, "second"))
                               .at("id");
  const std::string fast = m.create(request("connect4", "Random", "first")).at("id");
  // The fast session answers while the slow agent is still searching.
  const auto v = m.play(fast, {{"col", 3}});
  m.wait(fast);
  EXPECT_EQ(m.get(fast).at("status"), "AwaitingHuman");
  (void)v;
  m.wait(slow);
  EXPECT_EQ(m.get(slow).at("status"), "AwaitingHuman");
}

// ---------------------------------------------------------------------------
// HTTP

TEST(Http, BindAddress) {
  EXPECT_EQ(bind_address(nullptr), std::make_pair(std::string("127.0.0.1"), 8080));
  EXPECT_EQ(bind_address("0.0.0.0:9000"), std::make_pair(std::string("0.0.0.0"), 9000));
  EXPECT_THROW(bind_address("localhost"), ConfigError);
  EXPECT_THROW(bind_address("h:port"), ConfigError);
}

TEST(Http, EndToEnd) {
  SessionManager sessions(sync_options());
  httplib::Server server;
  install_routes(server, sessions);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  auto health = cli.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body).at("status"), "ok");

  auto agents = cli.Get("/api/agents");
  ASSERT_TRUE(agents);
  EXPECT_EQ(json::parse(agents->body).at("agents").size(), 8u);

  auto created = cli.Post("/api/sessions", request("connect4", kFastDda1, "first").dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const std::string id = json::parse(created->body).at("id");

  auto moved = cli.Post("/api/sessions/" + id + "/moves", json{{"col", 3}}.dump(), "application/json");
  ASSERT_TRUE(moved);
  EXPECT_EQ(moved->status, 200);
  EXPECT_EQ(json::parse(moved->body).at("moves").size(), 2u);

  auto got = cli.Get("/api/sessions/" + id);
  ASSERT_TRUE(got);
  EXPECT_EQ(json::parse(got->body).at("moves").size(), 2u);

  auto bad = cli.Post("/api/sessions/" + id + "/moves", json{{"col", 9}}.dump(), "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body).at("legal_moves").size(), 7u);

  auto junk = cli.Post("/api/sessions", "{not json", "application/json");
  ASSERT_TRUE(junk);
  EXPECT_EQ(junk->status, 400);

  auto missing = cli.Get("/api/sessions/ffffffffffffffff");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  t.join();
}

}  // namespace
