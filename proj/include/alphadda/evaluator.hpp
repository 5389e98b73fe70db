#pragma once

#include <cmath>
#include <vector>

#include "alphadda/game.hpp"
#include "alphadda/heuristics.hpp"
#include "alphadda/random.hpp"

namespace alphadda {

/// Value in [-1, 1] from the first player's point of view (disc-color
/// convention: +1 means the first player is winning) and a probability
/// vector over the variant's action space.
struct EvalResult {
  double value = 0.0;
  std::vector<double> policy;
};

/// Policy-value function used by the tree search. `p_drop` is the
/// inference-time dropout probability on the head layers; evaluators without
/// head layers ignore it. `rng` supplies dropout randomness and may be null
/// when p_drop is 0.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvalResult evaluate(const Board& state, double p_drop = 0.0, Rng* rng = nullptr) const = 0;
};

inline double heuristic_scale(Variant v) { return is_othello(v) ? 100.0 : 20000.0; }

/// Deterministic stand-in for a trained network: tanh of the minimax leaf
/// evaluation and a uniform policy over the legal moves.
class HeuristicEvaluator final : public Evaluator {
 public:
  EvalResult evaluate(const Board& state, double /*p_drop*/ = 0.0, Rng* /*rng*/ = nullptr) const override {
    EvalResult r;
    r.value = std::tanh(evaluate_leaf(state, kFirst) / heuristic_scale(state.variant()));
    r.policy.assign(state.action_count(), 0.0);
    if (state.is_terminal()) {
      for (auto& p : r.policy) p = 1.0 / state.action_count();
      return r;
    }
    const auto moves = state.legal_moves_unchecked();
    for (const auto& m : moves) r.policy[action_index(state.variant(), m)] = 1.0 / moves.size();
    return r;
  }
};

inline EvalResult heuristic_evaluate(const Board& state) { return HeuristicEvaluator{}.evaluate(state); }

}  // namespace alphadda
