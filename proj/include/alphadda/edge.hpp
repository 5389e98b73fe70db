#pragma once

namespace alphadda {

/// Per-edge search statistics. W and Q are stored from the first player's
/// point of view.
struct EdgeStats {
  int n = 0;
  double w = 0.0;
  double q = 0.0;
  double p = 0.0;

  void add(double v) {
    ++n;
    w += v;
    q = w / n;
  }
};

}  // namespace alphadda
