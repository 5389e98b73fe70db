#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "alphadda/edge.hpp"
#include "alphadda/evaluator.hpp"
#include "alphadda/game.hpp"
#include "alphadda/heuristics.hpp"
#include "alphadda/random.hpp"
#include "alphadda/value_matching.hpp"

namespace alphadda {

// ---------------------------------------------------------------------------
// AlphaZero PUCT search
// ---------------------------------------------------------------------------

struct SearchParams {
  enum class Mode { Argmax, SoftmaxOpening };

  int n_sim = 200;
  double c_puct = 1.25;
  int t_opening = 4;
  double tau = 50.0;
  Mode mode = Mode::Argmax;
  // Dropout probability applied to every evaluation made inside the search.
  double p_drop = 0.0;
  // Dirichlet mixing at the root; 0 disables it (self-play uses 0.2).
  double root_noise_eps = 0.0;
  double dirichlet_alpha = 1.0;

  static SearchParams defaults(Variant v) {
    SearchParams p;
    switch (v) {
      case Variant::Connect4: p.n_sim = 200; p.t_opening = 4; p.tau = 50.0; break;
      case Variant::Othello6: p.n_sim = 200; p.t_opening = 4; p.tau = 20.0; break;
      case Variant::Othello8: p.n_sim = 400; p.t_opening = 6; p.tau = 40.0; break;
    }
    return p;
  }
};

struct SearchNode {
  Board state;
  std::optional<int> terminal;
  bool expanded = false;
  int visits = 0;  // N(s): sum of the edge visit counts
  std::vector<int> actions;
  std::vector<EdgeStats> edges;
  std::vector<int> children;  // index into the tree, -1 until created

  Color mover() const { return state.to_move(); }
};

struct SearchResult {
  std::vector<int> visits;  // indexed by action
  std::vector<double> q;    // edge Q per action, first-player view
  int total_visits() const {
    int s = 0;
    for (int v : visits) s += v;
    return s;
  }
  /// Visit counts normalized over the action space.
  std::vector<double> probabilities() const {
    std::vector<double> pi(visits.size(), 0.0);
    const int total = total_visits();
    if (total == 0) return pi;
    for (std::size_t a = 0; a < visits.size(); ++a) pi[a] = static_cast<double>(visits[a]) / total;
    return pi;
  }
};

/// Q(s,a) from the node mover's view + c_puct * P(s,a) * sqrt(N(s)) / (1 + N(s,a)).
inline std::vector<double> puct_scores(const SearchNode& node, double c_puct) {
  if (!node.expanded) throw std::logic_error("puct_select on unexpanded node");
  std::vector<double> scores(node.edges.size());
  const double sqrt_parent = std::sqrt(static_cast<double>(node.visits));
  for (std::size_t i = 0; i < node.edges.size(); ++i) {
    const auto& e = node.edges[i];
    const double q = e.n > 0 ? node.mover() * e.q : 0.0;
    scores[i] = q + c_puct * e.p * sqrt_parent / (1.0 + e.n);
  }
  return scores;
}

namespace detail {

inline int argmax_random_tie(const std::vector<double>& scores, Rng& rng) {
  const double best = *std::max_element(scores.begin(), scores.end());
  std::vector<int> ties;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] == best) ties.push_back(static_cast<int>(i));
  return ties.size() == 1 ? ties.front() : pick_uniform(rng, ties);
}

}  // namespace detail

/// Index of the selected edge (not the action id).
inline int puct_select(const SearchNode& node, double c_puct, Rng& rng) {
  return detail::argmax_random_tie(puct_scores(node, c_puct), rng);
}

inline int dda3_select(const SearchNode& node, const Dda3Hook& hook, Rng& rng) {
  if (!node.expanded) throw std::logic_error("dda3 select on unexpanded node");
  std::vector<double> scores(node.edges.size());
  for (std::size_t i = 0; i < node.edges.size(); ++i)
    scores[i] = dda3_score(node.edges[i], node.visits, hook.c_explore);
  return detail::argmax_random_tie(scores, rng);
}

/// Priors restricted to the legal actions and renormalized; uniform if the
/// evaluator gives them no mass.
inline std::vector<double> masked_priors(const std::vector<double>& policy, const std::vector<int>& actions) {
  std::vector<double> p(actions.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double x = actions[i] < static_cast<int>(policy.size()) ? policy[actions[i]] : 0.0;
    p[i] = std::isfinite(x) && x > 0.0 ? x : 0.0;
    sum += p[i];
  }
  for (auto& x : p) x = sum > 0.0 ? x / sum : 1.0 / static_cast<double>(actions.size());
  return p;
}

class PuctSearch {
 public:
  PuctSearch(const Evaluator& evaluator, SearchParams params, Rng& rng, const Dda3Hook* dda3 = nullptr)
      : evaluator_(evaluator), params_(params), rng_(rng), dda3_(dda3) {}

  SearchResult run(const Board& root) {
    if (root.is_terminal()) throw GameOver();
    if (params_.n_sim < 1) throw std::invalid_argument("n_sim must be >= 1");
    tree_.clear();
    tree_.push_back(make_node(root));
    expand(0);
    if (params_.root_noise_eps > 0.0) add_root_noise();
    for (int i = 0; i < params_.n_sim; ++i) simulate();

    SearchResult result;
    result.visits.assign(root.action_count(), 0);
    result.q.assign(root.action_count(), 0.0);
    const auto& r = tree_[0];
    for (std::size_t i = 0; i < r.actions.size(); ++i) {
      result.visits[r.actions[i]] = r.edges[i].n;
      result.q[r.actions[i]] = r.edges[i].q;
    }
    return result;
  }

  const std::vector<SearchNode>& tree() const { return tree_; }

 private:
  static SearchNode make_node(const Board& state) {
    SearchNode n;
    n.state = state;
    n.terminal = state.outcome();
    return n;
  }

  // Evaluates the node, creates its edges and returns the leaf value.
  double expand(int idx) {
    SearchNode& node = tree_[idx];
    const EvalResult ev = evaluator_.evaluate(node.state, params_.p_drop, &rng_);
    for (const auto& m : node.state.legal_moves_unchecked())
      node.actions.push_back(action_index(node.state.variant(), m));
    const auto priors = masked_priors(ev.policy, node.actions);
    node.edges.resize(node.actions.size());
    for (std::size_t i = 0; i < priors.size(); ++i) node.edges[i].p = priors[i];
    node.children.assign(node.actions.size(), -1);
    node.expanded = true;
    return std::clamp(ev.value, -1.0, 1.0);
  }

  void add_root_noise() {
    auto& edges = tree_[0].edges;
    const auto noise = sample_dirichlet(rng_, edges.size(), params_.dirichlet_alpha);
    for (std::size_t i = 0; i < edges.size(); ++i)
      edges[i].p = (1.0 - params_.root_noise_eps) * edges[i].p + params_.root_noise_eps * noise[i];
  }

  void simulate() {
    path_.clear();
    int idx = 0;
    double value = 0.0;
    for (;;) {
      SearchNode& node = tree_[idx];
      if (node.terminal) {
        value = *node.terminal;
        break;
      }
      if (!node.expanded) {
        value = expand(idx);
        break;
      }
      const int e = dda3_ ? dda3_select(node, *dda3_, rng_) : puct_select(node, params_.c_puct, rng_);
      path_.push_back({idx, e});
      int child = node.children[e];
      if (child < 0) {
        const Board next = node.state.apply(action_move(node.state.variant(), node.actions[e]));
        child = static_cast<int>(tree_.size());
        tree_.push_back(make_node(next));  // invalidates `node`
        tree_[idx].children[e] = child;
      }
      idx = child;
    }
    for (const auto& [n, e] : path_) {
      SearchNode& node = tree_[n];
      if (dda3_)
        dda3_backup(node.edges[e], value, dda3_->v_bar, node.mover(), dda3_->c_dda);
      else
        node.edges[e].add(value);
      ++node.visits;
    }
  }

  const Evaluator& evaluator_;
  SearchParams params_;
  Rng& rng_;
  const Dda3Hook* dda3_;
  std::vector<SearchNode> tree_;
  std::vector<std::pair<int, int>> path_;
};

inline SearchResult mcts_search(const Board& root, const Evaluator& evaluator, const SearchParams& params,
                                Rng& rng, const Dda3Hook* dda3 = nullptr) {
  return PuctSearch(evaluator, params, rng, dda3).run(root);
}

/// Softmax over legal actions of N^(1/tau): exp(N^(1/tau)) / sum exp(N^(1/tau)).
inline std::vector<double> visit_softmax(const std::vector<int>& visits, const std::vector<int>& legal_actions,
                                         double tau) {
  std::vector<double> logits(legal_actions.size());
  for (std::size_t i = 0; i < legal_actions.size(); ++i)
    logits[i] = std::pow(static_cast<double>(visits[legal_actions[i]]), 1.0 / tau);
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (auto& l : logits) sum += (l = std::exp(l - mx));
  for (auto& l : logits) l /= sum;
  return logits;
}

/// Picks an action from root visit counts: argmax with random tie-break, or
/// a softmax sample when `sample` is set.
inline int choose_action(const std::vector<int>& visits, const std::vector<int>& legal_actions, bool sample,
                         double tau, Rng& rng) {
  if (sample) {
    const auto probs = visit_softmax(visits, legal_actions, tau);
    std::discrete_distribution<int> dist(probs.begin(), probs.end());
    return legal_actions[dist(rng)];
  }
  std::vector<double> scores;
  for (int a : legal_actions) scores.push_back(visits[a]);
  return legal_actions[detail::argmax_random_tie(scores, rng)];
}

inline std::vector<int> legal_actions(const Board& state) {
  std::vector<int> out;
  for (const auto& m : state.legal_moves_unchecked()) out.push_back(action_index(state.variant(), m));
  return out;
}

inline bool samples_opening(const Board& state, const SearchParams& params) {
  return params.mode == SearchParams::Mode::SoftmaxOpening && state.turn_index() < params.t_opening;
}

inline Move decide_move_alphazero(const Board& state, const Evaluator& evaluator, const SearchParams& params,
                                  Rng& rng, const Dda3Hook* dda3 = nullptr) {
  const auto result = mcts_search(state, evaluator, params, rng, dda3);
  const int a = choose_action(result.visits, legal_actions(state), samples_opening(state, params), params.tau, rng);
  return action_move(state.variant(), a);
}

// ---------------------------------------------------------------------------
// Vanilla UCT with random playouts
// ---------------------------------------------------------------------------

struct UctParams {
  int n_sim = 300;
  double c = 0.5;
  double eps = 1e-7;
  int n_open = 5;

  static UctParams mcts1() { return {300, 0.5, 1e-7, 5}; }
  static UctParams mcts2() { return {100, 0.5, 1e-7, 5}; }
};

inline int random_playout(Board state, Rng& rng) {
  for (;;) {
    if (auto o = state.outcome()) return *o;
    const auto moves = state.legal_moves_unchecked();
    state = state.apply(pick_uniform(rng, moves));
  }
}

class UctSearch {
 public:
  struct Node {
    Board state;
    Move move;
    Color moved_by = 0;  // player whose move led here
    int n = 0;
    double q = 0.0;      // cumulative result for `moved_by`
    std::optional<int> terminal;
    std::vector<int> children;
  };

  UctSearch(UctParams params, Rng& rng) : params_(params), rng_(rng) {}

  Move decide(const Board& root) {
    run(root);
    std::vector<double> visits;
    for (int c : nodes_[0].children) visits.push_back(nodes_[c].n);
    return nodes_[nodes_[0].children[detail::argmax_random_tie(visits, rng_)]].move;
  }

  void run(const Board& root) {
    if (root.is_terminal()) throw GameOver();
    nodes_.clear();
    nodes_.push_back(Node{root, Move::pass(), -root.to_move(), 0, 0.0, std::nullopt, {}});
    expand(0);
    for (int i = 0; i < params_.n_sim; ++i) simulate();
  }

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  void expand(int idx) {
    const Board state = nodes_[idx].state;
    for (const auto& m : state.legal_moves_unchecked()) {
      Board next = state.apply(m);
      auto term = next.outcome();
      nodes_[idx].children.push_back(static_cast<int>(nodes_.size()));
      nodes_.push_back(Node{std::move(next), m, state.to_move(), 0, 0.0, term, {}});
    }
  }

  int select(const Node& parent) {
    std::vector<int> unvisited;
    for (int c : parent.children)
      if (nodes_[c].n == 0) unvisited.push_back(c);
    if (!unvisited.empty()) return pick_uniform(rng_, unvisited);
    std::vector<double> scores;
    for (int c : parent.children) {
      const Node& ch = nodes_[c];
      scores.push_back(ch.q / ch.n + params_.c * std::sqrt(std::log(parent.n + 1.0) / (ch.n + params_.eps)));
    }
    return parent.children[detail::argmax_random_tie(scores, rng_)];
  }

  void simulate() {
    path_.clear();
    int idx = 0;
    path_.push_back(idx);
    while (!nodes_[idx].children.empty()) {
      idx = select(nodes_[idx]);
      path_.push_back(idx);
    }
    const Node& leaf = nodes_[idx];
    const int winner = leaf.terminal ? *leaf.terminal : random_playout(leaf.state, rng_);
    for (int i : path_) {
      Node& n = nodes_[i];
      ++n.n;
      if (winner != 0) n.q += winner == n.moved_by ? 1.0 : -1.0;
    }
    if (!nodes_[idx].terminal && idx != 0 && nodes_[idx].n >= params_.n_open) expand(idx);
  }

  UctParams params_;
  Rng& rng_;
  std::vector<Node> nodes_;
  std::vector<int> path_;
};

inline Move decide_move_vanilla_mcts(const Board& state, const UctParams& params, Rng& rng) {
  return UctSearch(params, rng).decide(state);
}

// ---------------------------------------------------------------------------
// Minimax
// ---------------------------------------------------------------------------

struct MinimaxParams {
  int depth = 3;
  int endgame_full_depth_turns = 6;
  bool alpha_beta = true;
};

inline double minimax_terminal_value(const Board& b, int winner, Color c_minimax) {
  const double scale = is_othello(b.variant()) ? kOthelloTerminalScore : kConnect4TerminalScore;
  return scale * winner * c_minimax;
}

/// Minimax value of `state` for `c_minimax`, searching `depth` plies.
inline double minimax_value(const Board& state, int depth, Color c_minimax, bool alpha_beta,
                            double alpha = -std::numeric_limits<double>::infinity(),
                            double beta = std::numeric_limits<double>::infinity()) {
  if (auto o = state.outcome()) return minimax_terminal_value(state, *o, c_minimax);
  if (depth == 0) return evaluate_leaf(state, c_minimax);
  const bool maximizing = state.to_move() == c_minimax;
  double best = maximizing ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  for (const auto& m : state.legal_moves_unchecked()) {
    const double v = minimax_value(state.apply(m), depth - 1, c_minimax, alpha_beta, alpha, beta);
    if (maximizing) {
      best = std::max(best, v);
      alpha = std::max(alpha, v);
    } else {
      best = std::min(best, v);
      beta = std::min(beta, v);
    }
    if (alpha_beta && alpha >= beta) break;
  }
  return best;
}

inline int minimax_depth(const Board& state, const MinimaxParams& params) {
  if (is_othello(state.variant()) && state.count(0) <= params.endgame_full_depth_turns)
    return std::numeric_limits<int>::max() / 2;
  return params.depth;
}

/// Exact value of each legal root move (same order as legal_moves_unchecked).
inline std::vector<double> minimax_root_values(const Board& state, const MinimaxParams& params) {
  if (state.is_terminal()) throw GameOver();
  const Color me = state.to_move();
  const int depth = minimax_depth(state, params);
  std::vector<double> values;
  for (const auto& m : state.legal_moves_unchecked())
    values.push_back(minimax_value(state.apply(m), depth - 1, me, params.alpha_beta));
  return values;
}

inline Move minimax_decide(const Board& state, const MinimaxParams& params, Rng& rng) {
  const auto values = minimax_root_values(state, params);
  const auto moves = state.legal_moves_unchecked();
  return moves[detail::argmax_random_tie(values, rng)];
}

// ---------------------------------------------------------------------------
// Random
// ---------------------------------------------------------------------------

inline Move decide_move_random(const Board& state, Rng& rng) { return pick_uniform(rng, state.valid_moves()); }

}  // namespace alphadda
