#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "alphadda/dda.hpp"
#include "alphadda/game.hpp"
#include "alphadda/network.hpp"
#include "alphadda/random.hpp"
#include "alphadda/search.hpp"

namespace alphadda {

struct TrainConfig {
  int n_iter = 600;
  int n_self = 30;
  int n_sim = 200;
  double c_puct = 1.25;
  int t_opening = 4;
  double tau = 50.0;
  double epsilon_noise = 0.2;
  double dirichlet_alpha = 1.0;
  int n_queue = 20000;
  int n_epoch = 1;
  int n_batch = 2048;
  double learning_rate = 0.2;
  double momentum = 0.9;
  double weight_decay = 0.0001;

  static TrainConfig paper(Variant v) {
    TrainConfig c;
    switch (v) {
      case Variant::Connect4: break;
      case Variant::Othello6: c.n_self = 10; c.tau = 20.0; break;
      case Variant::Othello8:
        c.n_iter = 700; c.n_self = 10; c.n_sim = 400; c.t_opening = 6; c.tau = 40.0; c.n_queue = 50000;
        break;
    }
    return c;
  }

  /// Reduced counts for CPU runs; search and exploration constants unchanged.
  static TrainConfig desk(Variant v) {
    TrainConfig c = paper(v);
    c.n_iter = 10;
    c.n_self = 8;
    c.n_sim = 50;
    c.n_queue = 5000;
    c.n_batch = 64;
    c.learning_rate = 0.01;
    return c;
  }

  SearchParams search_params() const {
    SearchParams p;
    p.n_sim = n_sim;
    p.c_puct = c_puct;
    p.t_opening = t_opening;
    p.tau = tau;
    p.mode = SearchParams::Mode::SoftmaxOpening;
    p.root_noise_eps = epsilon_noise;
    p.dirichlet_alpha = dirichlet_alpha;
    return p;
  }
};

/// Bounded FIFO of training samples; the oldest entries are evicted first.
class ReplayQueue {
 public:
  explicit ReplayQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(TrainingSample s) {
    if (capacity_ == 0) return;
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(s));
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const TrainingSample& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::size_t capacity_;
  std::deque<TrainingSample> items_;
};

struct TurnRecord {
  Board board;
  std::vector<double> pi;
  int c_win = 0;
  std::optional<Move> move;
  std::optional<DdaDiagnostics> dda;
};

using GameRecord = std::vector<TurnRecord>;

/// Plays `n_games` games of the evaluator against itself. Opening moves are
/// sampled from the visit softmax, later moves take the most visited edge.
inline std::vector<GameRecord> self_play(const Evaluator& evaluator, Variant variant, const TrainConfig& config,
                                         int n_games, Rng& rng) {
  const SearchParams params = config.search_params();
  std::vector<GameRecord> games;
  for (int g = 0; g < n_games; ++g) {
    GameRecord record;
    Board state = new_game(variant);
    while (!state.is_terminal()) {
      const auto result = mcts_search(state, evaluator, params, rng);
      const int a = choose_action(result.visits, legal_actions(state), samples_opening(state, params), params.tau, rng);
      const Move m = action_move(variant, a);
      record.push_back({state, result.probabilities(), 0, m, std::nullopt});
      state = state.apply(m);
    }
    const int winner = *state.outcome();
    for (auto& t : record) t.c_win = winner;
    games.push_back(std::move(record));
  }
  return games;
}

inline TrainingSample make_sample(const Board& b, const std::vector<double>& pi, int c_win) {
  return {encode_planes(b), std::vector<float>(pi.begin(), pi.end()), static_cast<float>(c_win)};
}

/// Pushes every symmetric image of every turn (2 for Connect4, 8 for Othello).
inline std::size_t augment_into(const GameRecord& game, ReplayQueue& queue) {
  std::size_t added = 0;
  for (const auto& t : game)
    for (const auto& [board, pi] : symmetries(t.board, t.pi)) {
      queue.push(make_sample(board, pi, t.c_win));
      ++added;
    }
  return added;
}

class Trainer {
 public:
  Trainer(std::shared_ptr<Network> net, TrainConfig config)
      : net_(std::move(net)), config_(config),
        optimizer_(config.learning_rate, config.momentum, config.weight_decay) {}

  /// One optimizer update on `batch`; returns the mean loss before the update.
  double train_step(const std::vector<const TrainingSample*>& batch) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    Network::Vec grad;
    const double l = net_->batch_loss(batch, &grad);
    optimizer_.step(net_->parameters(), grad);
    return l;
  }

  /// n_epoch passes over the queue in shuffled mini-batches of n_batch.
  /// Returns the mean batch loss.
  double learn(const ReplayQueue& queue, Rng& rng) {
    if (queue.size() == 0) return 0.0;
    std::vector<std::size_t> order(queue.size());
    double total = 0.0;
    int steps = 0;
    for (int e = 0; e < config_.n_epoch; ++e) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += config_.n_batch) {
        std::vector<const TrainingSample*> batch;
        for (std::size_t i = start; i < std::min(order.size(), start + config_.n_batch); ++i)
          batch.push_back(&queue[order[i]]);
        total += train_step(batch);
        ++steps;
      }
    }
    return steps ? total / steps : 0.0;
  }

  Network& network() { return *net_; }
  const TrainConfig& config() const { return config_; }

 private:
  std::shared_ptr<Network> net_;
  TrainConfig config_;
  SgdMomentum<float> optimizer_;
};

struct IterationReport {
  int iteration = 0;
  std::size_t games = 0;
  std::size_t samples_added = 0;
  std::size_t queue_size = 0;
  double mean_loss = 0.0;
};

/// Self-play, augmentation and learning, repeated n_iter times starting at
/// `first_iteration`. `on_checkpoint` runs after every iteration.
inline std::vector<IterationReport> train(std::shared_ptr<Network> net, const TrainConfig& config, std::uint64_t seed,
                                          const std::function<void(const IterationReport&, const Network&)>& on_checkpoint = {},
                                          int first_iteration = 0) {
  Trainer trainer(net, config);
  ReplayQueue queue(static_cast<std::size_t>(config.n_queue));
  std::vector<IterationReport> reports;
  for (int it = first_iteration; it < config.n_iter; ++it) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(it)));
    auto snapshot = std::make_shared<const Network>(*net);
    const NetworkEvaluator evaluator(snapshot);
    IterationReport rep;
    rep.iteration = it;
    const auto games = self_play(evaluator, net->config().variant, config, config.n_self, rng);
    rep.games = games.size();
    for (const auto& g : games) rep.samples_added += augment_into(g, queue);
    rep.queue_size = queue.size();
    rep.mean_loss = trainer.learn(queue, rng);
    reports.push_back(rep);
    if (on_checkpoint) on_checkpoint(rep, *net);
  }
  return reports;
}

}  // namespace alphadda
