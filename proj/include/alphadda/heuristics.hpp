#pragma once

#include <array>
#include <stdexcept>

#include "alphadda/game.hpp"

namespace alphadda {

// Positional weights for the Othello leaf evaluation, row-major.
inline constexpr std::array<int, 36> kOthello6Weights{
    30, -5,  2,  2, -5,  30,
    -5, -15, 3,  3, -15, -5,
    2,  3,   0,  0, 3,   2,
    2,  3,   0,  0, 3,   2,
    -5, -15, 3,  3, -15, -5,
    30, -5,  2,  2, -5,  30};

inline constexpr std::array<int, 64> kOthello8Weights{
    120, -20, 20, 5,  5,  20, -20, 120,
    -20, -40, -5, -5, -5, -5, -40, -20,
    20,  -5,  15, 3,  3,  15, -5,  20,
    5,   -5,  3,  3,  3,  3,  -5,  5,
    5,   -5,  3,  3,  3,  3,  -5,  5,
    20,  -5,  15, 3,  3,  15, -5,  20,
    -20, -40, -5, -5, -5, -5, -40, -20,
    120, -20, 20, 5,  5,  20, -20, 120};

inline constexpr double kConnect4PairScore = 100.0;
inline constexpr double kConnect4TripleScore = 10000.0;
inline constexpr double kConnect4TerminalScore = 1000000.0;
inline constexpr double kOthelloTerminalScore = 1000.0;

/// Connect4 leaf value for the player with color `c_minimax`. Every maximal
/// same-color run of length exactly 2 or 3 is counted once per direction.
/// Terminal boards score kConnect4TerminalScore * c_win * c_minimax.
inline double evaluate_leaf_connect4(const Board& b, Color c_minimax) {
  if (b.variant() != Variant::Connect4) throw std::invalid_argument("connect4 leaf on wrong variant");
  if (auto o = b.outcome()) return kConnect4TerminalScore * *o * c_minimax;
  static constexpr std::array<std::pair<int, int>, 4> kLines{{{0, 1}, {1, 0}, {1, 1}, {1, -1}}};
  double e = 0.0;
  for (int r = 0; r < b.rows(); ++r)
    for (int c = 0; c < b.cols(); ++c) {
      const int v = b.at(r, c);
      if (v == 0) continue;
      for (const auto& [dr, dc] : kLines) {
        // Only start counting at the first cell of a run.
        if (b.on_board(r - dr, c - dc) && b.at(r - dr, c - dc) == v) continue;
        int len = 1;
        while (b.on_board(r + len * dr, c + len * dc) && b.at(r + len * dr, c + len * dc) == v) ++len;
        if (len == 2) e += kConnect4PairScore * v * c_minimax;
        if (len == 3) e += kConnect4TripleScore * v * c_minimax;
      }
    }
  return e;
}

inline double evaluate_leaf_othello(const Board& b, Color c_minimax) {
  const int* weights = nullptr;
  switch (b.variant()) {
    case Variant::Othello6: weights = kOthello6Weights.data(); break;
    case Variant::Othello8: weights = kOthello8Weights.data(); break;
    default: throw std::invalid_argument("othello leaf evaluation needs an Othello variant");
  }
  double e = 0.0;
  for (int i = 0; i < b.cell_count(); ++i) e += weights[i] * b.at(i);
  return e * c_minimax;
}

inline double evaluate_leaf(const Board& b, Color c_minimax) {
  return is_othello(b.variant()) ? evaluate_leaf_othello(b, c_minimax) : evaluate_leaf_connect4(b, c_minimax);
}

}  // namespace alphadda
