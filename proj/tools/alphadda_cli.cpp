// alphadda: training, tournaments, sweeps, grid search and the game service.
#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>

#include "alphadda/http_service.hpp"

namespace fs = std::filesystem;
using namespace alphadda;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string preset;
  std::string out;
  std::string game;
  std::optional<int> threads;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config_path, "JSON run config")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "master seed (overrides the config)");
  sub->add_option("--preset", f.preset, "default scale")->check(CLI::IsMember({"paper", "desk"}));
  sub->add_option("--out", f.out, "output directory (overrides the config)");
  sub->add_option("--game", f.game, "connect4, othello6 or othello8 (overrides the config)");
  sub->add_option("--threads", f.threads, "worker threads for game series")->check(CLI::PositiveNumber);
}

RunConfig load_config(const CommonFlags& f) {
  json j = json::object();
  if (!f.config_path.empty()) {
    std::ifstream is(f.config_path);
    if (!is) throw ConfigError("cannot read config '" + f.config_path + "'");
    try {
      j = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError("config '" + f.config_path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config '" + f.config_path + "' must be a JSON object");
  }
  if (f.seed) j["seed"] = *f.seed;
  if (!f.out.empty()) j["out"] = f.out;
  if (!f.game.empty()) j["game"] = f.game;
  if (f.threads) j["threads"] = *f.threads;
  std::optional<Preset> preset;
  if (!f.preset.empty()) preset = parse_preset(f.preset);
  return parse_run_config(j, preset);
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw std::runtime_error("cannot create output directory '" + c.out + "'");
  return out;
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fill) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  fill(os);
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

// Records which preset and seed produced the outputs next to them.
void write_manifest(const fs::path& out, const std::string& command, const RunConfig& c) {
  json agents = json::array();
  for (const auto& a : c.agents) agents.push_back(to_json(a));
  const json m = {{"command", command},          {"preset", to_string(c.preset)}, {"game", std::string(variant_name(c.game))},
                  {"seed", c.seed},              {"network", to_json(c.network)}, {"agents", agents},
                  {"checkpoint", c.checkpoint}};
  write_file(out / (command + ".run.json"), [&](std::ostream& os) { os << m.dump(2) << '\n'; });
}

std::string header(const std::string& what, const RunConfig& c) {
  return what + " (" + std::string(variant_name(c.game)) + ", " + to_string(c.preset) + " preset, seed " +
         std::to_string(c.seed) + ")";
}

template <typename T>
const T& require_section(const std::optional<T>& s, const std::string& name) {
  if (!s) throw ConfigError("config has no '" + name + "' section");
  return *s;
}

// ---------------------------------------------------------------------------

std::string checkpoint_name(int completed) {
  std::ostringstream os;
  os << "checkpoint_" << std::setw(4) << std::setfill('0') << completed << ".adda";
  return os.str();
}

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  static const std::regex pattern(R"(checkpoint_(\d{4,})\.adda)");
  std::optional<fs::path> best;
  int best_n = -1;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, pattern) && std::stoi(m[1]) > best_n) {
      best_n = std::stoi(m[1]);
      best = e.path();
    }
  }
  return best;
}

// Keeps loss rows for iterations before `first`, dropping any written by an
// interrupted run after its last checkpoint.
void trim_loss_log(const fs::path& path, int first) {
  std::vector<std::string> keep;
  if (std::ifstream is(path); is) {
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line))
      if (!line.empty() && std::stoi(line.substr(0, line.find(','))) < first) keep.push_back(line);
  }
  write_file(path, [&](std::ostream& os) {
    os << "iteration,games,samples_added,queue_size,mean_loss\n";
    for (const auto& l : keep) os << l << '\n';
  });
}

int cmd_train(const RunConfig& c) {
  const fs::path out = prepare_out(c);
  if (c.network.variant != c.game) throw ConfigError("network variant does not match 'game'");
  std::shared_ptr<Network> net;
  int first = 0;
  if (auto latest = latest_checkpoint(out)) {
    CheckpointMeta meta;
    net = load_checkpoint(latest->string(), &meta);
    if (!(net->config() == c.network))
      throw ConfigError("checkpoint '" + latest->string() + "' does not match the configured network");
    first = meta.iteration + 1;
    std::cout << "resuming from " << latest->string() << " at iteration " << first << '\n';
  } else {
    net = std::make_shared<Network>(c.network, c.seed);
  }
  write_manifest(out, "train", c);
  const fs::path loss = out / "loss.csv";
  trim_loss_log(loss, first);
  if (first >= c.train.n_iter) {
    std::cout << "nothing to do: " << c.train.n_iter << " iterations already done\n";
    return 0;
  }
  std::cout << header("training", c) << ", iterations " << first << ".." << c.train.n_iter - 1 << '\n';
  train(
      net, c.train, c.seed,
      [&](const IterationReport& r, const Network& n) {
        {
          std::ofstream os(loss, std::ios::app);
          os << std::setprecision(10) << r.iteration << ',' << r.games << ',' << r.samples_added << ','
             << r.queue_size << ',' << r.mean_loss << '\n';
          if (!os) throw std::runtime_error("cannot append to '" + loss.string() + "'");
        }
        const fs::path ckpt = out / checkpoint_name(r.iteration + 1);
        const fs::path tmp = fs::path(ckpt).concat(".tmp");
        save_checkpoint(tmp.string(), n, r.iteration, c.seed);
        fs::rename(tmp, ckpt);
        std::cout << "iteration " << r.iteration << ": loss " << r.mean_loss << ", queue " << r.queue_size << " -> "
                  << ckpt.string() << std::endl;
      },
      first);
  return 0;
}

int cmd_match(const RunConfig& c) {
  const auto& m = require_section(c.match, "match");
  EvaluatorCache cache;
  const auto a = build_agent(c.agent(m.a), c.game, cache, c.checkpoint);
  const auto b = build_agent(c.agent(m.b), c.game, cache, c.checkpoint);
  const fs::path out = prepare_out(c);
  write_manifest(out, "match", c);
  const auto r = match_series(a, b, c.game, m.games, c.seed, c.threads);
  write_file(out / "match_games.csv", [&](std::ostream& os) { write_match_games_csv(os, r); });
  write_file(out / "match.csv", [&](std::ostream& os) { write_match_table_csv(os, {{b.label(), r}}); });
  std::cout << header(a.label() + " vs " + b.label(), c) << '\n'
            << "games " << r.played() << ": win " << r.wins << ", loss " << r.losses << ", draw " << r.draws << '\n';
  return 0;
}

int cmd_elo(const RunConfig& c) {
  const EloSection e = c.elo.value_or(EloSection{});
  if (c.agents.size() < 2) throw ConfigError("elo needs at least two entries in 'agents'");
  EvaluatorCache cache;
  std::vector<AgentConfig> agents;
  for (const auto& s : c.agents) agents.push_back(build_agent(s, c.game, cache, c.checkpoint));
  const fs::path out = prepare_out(c);
  write_manifest(out, "elo", c);
  const auto r = round_robin(agents, c.game, e.rounds, c.seed, c.threads);
  write_file(out / "elo.csv", [&](std::ostream& os) { write_elo_csv(os, r.table); });
  write_file(out / "elo_games.csv", [&](std::ostream& os) {
    os << "round,first,second,winner\n";
    for (const auto& g : r.log)
      os << g.round << ',' << r.table.agents[g.first] << ',' << r.table.agents[g.second] << ','
         << color_char(g.winner) << '\n';
  });
  std::cout << header("Elo after " + std::to_string(e.rounds) + " rounds", c) << '\n';
  std::size_t width = 5;
  for (const auto& n : r.table.agents) width = std::max(width, n.size());
  std::cout << std::left << std::setw(static_cast<int>(width) + 2) << "agent" << "rating\n";
  for (std::size_t i = 0; i < agents.size(); ++i)
    std::cout << std::left << std::setw(static_cast<int>(width) + 2) << r.table.agents[i] << std::fixed
              << std::setprecision(1) << r.table.ratings[i] << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& c) {
  const auto& w = require_section(c.sweep, "sweep");
  EvaluatorCache cache;
  const auto subject = build_agent(c.agent(w.subject), c.game, cache, c.checkpoint);
  std::vector<RatedOpponent> opponents;
  for (const auto& o : w.opponents) opponents.push_back({build_agent(c.agent(o.agent), c.game, cache, c.checkpoint), o.rating});
  const fs::path out = prepare_out(c);
  write_manifest(out, "sweep", c);
  const auto pts = parameter_sweep(subject, w.param, w.values, opponents, c.game, w.games, c.seed, c.threads);
  write_file(out / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, w.param, pts); });
  write_file(out / "sweep_matches.csv", [&](std::ostream& os) {
    os << std::setprecision(10) << "value,opponent,win,loss,draw\n";
    for (const auto& p : pts)
      for (std::size_t o = 0; o < opponents.size(); ++o) {
        const auto& r = p.per_opponent[o];
        os << p.value << ',' << opponents[o].agent.label() << ',' << r.win_rate() << ',' << r.loss_rate() << ','
           << r.draw_rate() << '\n';
      }
  });
  std::cout << header(subject.label() + " sweep over " + w.param, c) << '\n';
  for (const auto& p : pts) {
    std::ostringstream rating;
    rating << std::fixed << std::setprecision(1) << p.rating;
    std::cout << w.param << " = " << p.value << ": rating " << rating.str() << '\n';
  }
  return 0;
}

int cmd_gridsearch(const RunConfig& c) {
  const auto& g = require_section(c.gridsearch, "gridsearch");
  EvaluatorCache cache;
  const auto subject = build_agent(c.agent(g.subject), c.game, cache, c.checkpoint);
  std::vector<AgentConfig> opponents;
  for (const auto& o : g.opponents) opponents.push_back(build_agent(c.agent(o), c.game, cache, c.checkpoint));
  const fs::path out = prepare_out(c);
  write_manifest(out, "gridsearch", c);
  const auto r = grid_search(subject, g.grid, opponents, c.game, g.games, c.seed, c.threads);
  write_file(out / "grid.csv", [&](std::ostream& os) { write_grid_csv(os, r); });
  json best = json::object();
  for (const auto& [k, v] : r.best_cell().params) best[k] = v;
  write_file(out / "grid_best.json", [&](std::ostream& os) {
    os << json{{"cell", r.best}, {"params", best}, {"objective", r.best_cell().objective}}.dump(2) << '\n';
  });
  std::cout << header(subject.label() + " grid search, " + std::to_string(r.cells.size()) + " cells", c) << '\n'
            << "best cell " << r.best << ": " << best.dump() << ", objective " << r.best_cell().objective << '\n';
  return 0;
}

int cmd_serve(const RunConfig& c, const std::string& snapshots, const std::string& static_dir) {
  ServiceOptions o;
  o.snapshot_dir = snapshots.empty() ? (fs::path(c.out) / "sessions").string() : snapshots;
  o.default_checkpoint = c.checkpoint;
  SessionManager sessions(o);
  std::vector<std::string> problems;
  const auto restored = sessions.restore(&problems);
  for (const auto& p : problems) std::cerr << "warning: " << p << '\n';
  httplib::Server server;
  install_routes(server, sessions, static_dir);
  const auto [host, port] = bind_address();
  if (!server.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  std::cout << "serving " << variant_name(c.game) << " sessions on http://" << host << ':' << port << " ("
            << restored << " restored, snapshots in " << o.snapshot_dir << ")" << std::endl;
  server.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AlphaDDA engine: training, tournaments and live play"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string snapshots, static_dir;

  std::vector<std::pair<CLI::App*, std::function<int(const RunConfig&)>>> commands = {
      {app.add_subcommand("train", "self-play training; resumes from the newest checkpoint in --out"), cmd_train},
      {app.add_subcommand("match", "one series between the two agents named in 'match'"), cmd_match},
      {app.add_subcommand("elo", "round-robin Elo over every agent in 'agents'"), cmd_elo},
      {app.add_subcommand("sweep", "rating of one agent while a parameter varies"), cmd_sweep},
      {app.add_subcommand("gridsearch", "balance search over adjusting-agent parameters"), cmd_gridsearch},
      {app.add_subcommand("serve", "HTTP game service (bind address from ADDA_BIND)"),
       [&](const RunConfig& c) { return cmd_serve(c, snapshots, static_dir); }},
  };
  for (auto& [sub, _] : commands) add_common(sub, flags);
  commands.back().first->add_option("--snapshots", snapshots, "session snapshot directory (default OUT/sessions)");
  commands.back().first->add_option("--static", static_dir, "directory served at /")->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    const RunConfig config = load_config(flags);
    for (auto& [sub, run] : commands)
      if (sub->parsed()) return run(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
