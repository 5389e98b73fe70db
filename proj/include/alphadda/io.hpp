#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "alphadda/dda.hpp"
#include "alphadda/game.hpp"
#include "alphadda/network.hpp"
#include "alphadda/training.hpp"

namespace alphadda {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Checkpoints
//
//   magic    4 bytes  "ADDA"
//   version  u32 LE   (1)
//   meta_len u32 LE
//   meta     meta_len bytes of JSON: game, network, iteration, seed, parameter_count
//   count    u64 LE
//   weights  count float32 LE, in ParameterLayout order
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[4] = {'A', 'D', 'D', 'A'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  NetworkConfig network;
  int iteration = 0;
  std::uint64_t seed = 0;
};

inline json to_json(const NetworkConfig& c) {
  return {{"game", std::string(variant_name(c.variant))},
          {"blocks", c.blocks},
          {"filters", c.filters},
          {"kernel", c.kernel},
          {"value_hidden", c.value_hidden},
          {"policy_hidden", c.policy_hidden},
          {"history", c.history}};
}

inline NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig c;
  c.variant = parse_variant(j.at("game").get<std::string>());
  c.blocks = j.at("blocks").get<int>();
  c.filters = j.at("filters").get<int>();
  c.kernel = j.at("kernel").get<int>();
  c.value_hidden = j.at("value_hidden").get<int>();
  c.policy_hidden = j.at("policy_hidden").get<int>();
  c.history = j.at("history").get<int>();
  auto in = [](int x, int lo, int hi) { return x >= lo && x <= hi; };
  if (!in(c.blocks, 0, 64) || !in(c.filters, 1, 4096) || !in(c.kernel, 1, 7) || c.kernel % 2 == 0 ||
      !in(c.value_hidden, 1, 65536) || !in(c.policy_hidden, 1, 65536) || c.history != 1)
    throw std::invalid_argument("network dimensions out of range");
  return c;
}

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("truncated checkpoint");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Network& net, int iteration, std::uint64_t seed) {
  json meta = {{"game", std::string(variant_name(net.config().variant))},
               {"network", to_json(net.config())},
               {"iteration", iteration},
               {"seed", seed},
               {"parameter_count", net.parameter_count()}};
  const std::string m = meta.dump();
  os.write(kCheckpointMagic, 4);
  detail::write_le<std::uint32_t>(os, kCheckpointVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.size()));
  os.write(m.data(), static_cast<std::streamsize>(m.size()));
  detail::write_le<std::uint64_t>(os, net.parameter_count());
  const auto& p = net.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    std::uint32_t bits;
    const float f = p[i];
    std::memcpy(&bits, &f, sizeof bits);
    detail::write_le<std::uint32_t>(os, bits);
  }
  if (!os) throw std::runtime_error("failed writing checkpoint");
}

inline void save_checkpoint(const std::string& path, const Network& net, int iteration, std::uint64_t seed) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  write_checkpoint(os, net, iteration, seed);
}

inline std::shared_ptr<Network> read_checkpoint(std::istream& is, CheckpointMeta* meta_out = nullptr) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError("not a checkpoint file");
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto len = detail::read_le<std::uint32_t>(is);
  std::string m(len, '\0');
  if (!is.read(m.data(), len)) throw FormatError("truncated checkpoint metadata");
  CheckpointMeta meta;
  try {
    const json j = json::parse(m);
    meta.network = network_config_from_json(j.at("network"));
    meta.iteration = j.at("iteration").get<int>();
    meta.seed = j.at("seed").get<std::uint64_t>();
  } catch (const std::exception& e) {
    throw FormatError(std::string("bad checkpoint metadata: ") + e.what());
  }
  auto net = std::make_shared<Network>(meta.network);
  const auto count = detail::read_le<std::uint64_t>(is);
  if (count != net->parameter_count()) throw FormatError("checkpoint parameter count does not match its network");
  auto& p = net->parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const auto bits = detail::read_le<std::uint32_t>(is);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    p[i] = f;
  }
  if (meta_out) *meta_out = meta;
  return net;
}

inline std::shared_ptr<Network> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  try {
    return read_checkpoint(is, meta);
  } catch (const FormatError& e) {
    throw FormatError("corrupt checkpoint '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Game records: one JSON object per line and per turn.
//   {"game": int, "turn": int, "board": "<text board>", "pi": [...],
//    "c_win": -1|0|1, "move": int action (optional),
//    "dda": {"v_n":..,"v_bar":..,"n_sim":..,"p_drop":..} (optional)}
// ---------------------------------------------------------------------------

inline json to_json(const DdaDiagnostics& d) {
  json j = {{"v_n", d.v_n}, {"v_bar", d.v_bar}};
  if (d.n_sim) j["n_sim"] = *d.n_sim;
  if (d.p_drop) j["p_drop"] = *d.p_drop;
  return j;
}

inline DdaDiagnostics diagnostics_from_json(const json& j) {
  DdaDiagnostics d;
  d.v_n = j.at("v_n").get<double>();
  d.v_bar = j.at("v_bar").get<double>();
  if (j.contains("n_sim")) d.n_sim = j.at("n_sim").get<int>();
  if (j.contains("p_drop")) d.p_drop = j.at("p_drop").get<double>();
  return d;
}

inline json to_json(const TurnRecord& t, int game, int turn) {
  json j = {{"game", game}, {"turn", turn}, {"board", t.board.to_text()}, {"pi", t.pi}, {"c_win", t.c_win}};
  if (t.move) j["move"] = action_index(t.board.variant(), *t.move);
  if (t.dda) j["dda"] = to_json(*t.dda);
  return j;
}

inline void write_records(std::ostream& os, const std::vector<GameRecord>& games) {
  for (std::size_t g = 0; g < games.size(); ++g)
    for (std::size_t t = 0; t < games[g].size(); ++t)
      os << to_json(games[g][t], static_cast<int>(g), static_cast<int>(t)).dump() << '\n';
}

inline std::vector<GameRecord> read_records(std::istream& is) {
  std::vector<GameRecord> games;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto g = j.at("game").get<std::size_t>();
      if (g > games.size()) throw FormatError("game index out of order");
      if (g == games.size()) games.emplace_back();
      if (j.at("turn").get<std::size_t>() != games[g].size()) throw FormatError("turn index out of order");
      TurnRecord t;
      t.board = Board::from_text(j.at("board").get<std::string>());
      t.pi = j.at("pi").get<std::vector<double>>();
      t.c_win = j.at("c_win").get<int>();
      if (j.contains("move")) t.move = action_move(t.board.variant(), j.at("move").get<int>());
      if (j.contains("dda")) t.dda = diagnostics_from_json(j.at("dda"));
      games[g].push_back(std::move(t));
    } catch (const std::exception& e) {
      throw FormatError("record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return games;
}

}  // namespace alphadda
