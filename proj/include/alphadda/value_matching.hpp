#pragma once

#include <cmath>

#include "alphadda/edge.hpp"
#include "alphadda/game.hpp"

namespace alphadda {

/// Installed into a tree search to replace PUCT with the value-matching
/// score and penalty backup used by the third adjustment strategy.
struct Dda3Hook {
  double v_bar = 0.0;
  Color c_dda = kFirst;
  double c_explore = 0.5;
};

/// U = W / N(parent) + c * sqrt(2 ln(N(parent) + 1) / (n + 1)); the first
/// term is 0 when the parent has not been visited.
inline double dda3_score(const EdgeStats& edge, int parent_visits, double c) {
  const double exploit = parent_visits > 0 ? edge.w / parent_visits : 0.0;
  return exploit + c * std::sqrt(2.0 * std::log(parent_visits + 1.0) / (edge.n + 1.0));
}

/// W <- W - |v_leaf + v_bar * c_edge * c_dda|, N <- N + 1. Edges played by
/// the agent are pulled towards v_leaf = -v_bar, opponent edges towards
/// v_leaf = v_bar.
inline void dda3_backup(EdgeStats& edge, double v_leaf, double v_bar, Color c_edge, Color c_dda) {
  edge.w -= std::abs(v_leaf + v_bar * c_edge * c_dda);
  ++edge.n;
  edge.q = edge.w / edge.n;
}

}  // namespace alphadda
