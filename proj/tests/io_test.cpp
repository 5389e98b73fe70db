#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "alphadda/io.hpp"

using namespace alphadda;

namespace {

const NetworkConfig kSmall{Variant::Othello6, 1, 4, 3, 8, 6, 1};

std::string checkpoint_bytes(const Network& net) {
  std::ostringstream os(std::ios::binary);
  write_checkpoint(os, net, 3, 77);
  return os.str();
}

TEST(Checkpoint, RoundTrip) {
  const Network net(kSmall, 5);
  std::istringstream is(checkpoint_bytes(net), std::ios::binary);
  CheckpointMeta meta;
  const auto back = read_checkpoint(is, &meta);
  EXPECT_EQ(back->config(), kSmall);
  EXPECT_EQ(back->parameters(), net.parameters());
  EXPECT_EQ(meta.iteration, 3);
  EXPECT_EQ(meta.seed, 77u);
  const auto x = encode_planes(new_game(Variant::Othello6));
  EXPECT_EQ(back->forward(x).policy, net.forward(x).policy);
}

TEST(Checkpoint, HeaderLayout) {
  const std::string bytes = checkpoint_bytes(Network(kSmall, 1));
  ASSERT_GT(bytes.size(), 12u);
  EXPECT_EQ(bytes.substr(0, 4), "ADDA");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  const auto meta = json::parse(bytes.substr(12, len));
  EXPECT_EQ(meta.at("game"), "othello6");
  EXPECT_EQ(meta.at("parameter_count"), Network(kSmall).parameter_count());
  EXPECT_EQ(bytes.size(), 12 + len + 8 + 4 * Network(kSmall).parameter_count());
}

TEST(Checkpoint, CorruptInputs) {
  const std::string good = checkpoint_bytes(Network(kSmall, 1));
  auto read = [](std::string b) {
    std::istringstream is(b, std::ios::binary);
    return read_checkpoint(is);
  };
  EXPECT_THROW(read("XXXX" + good.substr(4)), FormatError);
  EXPECT_THROW(read(good.substr(0, good.size() - 3)), FormatError);
  EXPECT_THROW(read(good.substr(0, 20)), FormatError);
  std::string bad_version = good;
  bad_version[4] = 9;
  EXPECT_THROW(read(bad_version), FormatError);
  std::string bad_json = good;
  bad_json[12] = '#';
  EXPECT_THROW(read(bad_json), FormatError);
}

TEST(Checkpoint, FileErrorsNameThePath) {
  const auto dir = std::filesystem::temp_directory_path() / "alphadda_io_test";
  std::filesystem::create_directories(dir);
  const std::string missing = (dir / "nope.ckpt").string();
  try {
    load_checkpoint(missing);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(missing), std::string::npos);
  }
  const std::string junk = (dir / "junk.ckpt").string();
  std::ofstream(junk) << "not a checkpoint";
  try {
    load_checkpoint(junk);
    FAIL() << "expected an error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(junk), std::string::npos);
  }
  const std::string ok = (dir / "ok.ckpt").string();
  save_checkpoint(ok, Network(kSmall, 2), 0, 1);
  EXPECT_EQ(load_checkpoint(ok)->parameters(), Network(kSmall, 2).parameters());
  std::filesystem::remove_all(dir);
}

TEST(Records, RoundTrip) {
  GameRecord g;
  Board b = new_game(Variant::Connect4);
  std::vector<double> pi(7, 0.0);
  pi[2] = 0.75;
  pi[4] = 0.25;
  DdaDiagnostics d{0.25, -0.125, 12, std::nullopt};
  g.push_back({b, pi, -1, Move::drop(2), d});
  b = b.apply(Move::drop(2));
  g.push_back({b, pi, -1, Move::drop(4), std::nullopt});
  std::ostringstream os;
  write_records(os, {g, g});
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);

  std::istringstream is(os.str());
  const auto back = read_records(is);
  ASSERT_EQ(back.size(), 2u);
  ASSERT_EQ(back[1].size(), 2u);
  EXPECT_TRUE(back[1][1].board.same_position(g[1].board));
  EXPECT_EQ(back[0][0].pi, pi);
  EXPECT_EQ(back[0][0].c_win, -1);
  EXPECT_EQ(back[0][1].move, Move::drop(4));
  ASSERT_TRUE(back[0][0].dda.has_value());
  EXPECT_EQ(back[0][0].dda->n_sim, 12);
  EXPECT_EQ(back[0][0].dda->v_bar, -0.125);
  EXPECT_FALSE(back[0][0].dda->p_drop.has_value());
  EXPECT_FALSE(back[0][1].dda.has_value());
}

TEST(Records, BadLineReportsLineNumber) {
  std::istringstream is("\n{\"game\":0}\n");
  try {
    read_records(is);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream skipped(R"({"game":5,"turn":0,"board":"","pi":[],"c_win":0})");
  EXPECT_THROW(read_records(skipped), FormatError);
}

TEST(NetworkConfigJson, RoundTripAndValidation) {
  const auto c = NetworkConfig::paper(Variant::Othello8);
  EXPECT_EQ(network_config_from_json(to_json(c)), c);
  auto j = to_json(c);
  j["blocks"] = -3;
  EXPECT_THROW(network_config_from_json(j), std::invalid_argument);
}

}  // namespace
