#pragma once

#include <string>

#include "alphadda/game.hpp"
#include "support/rules_oracle.hpp"

namespace fixtures {

inline alphadda::Board board(const std::string& text) { return alphadda::Board::from_text(text); }

inline oracle::Grid to_grid(const alphadda::Board& b) {
  oracle::Grid g;
  g.rows = b.rows();
  g.cols = b.cols();
  for (int r = 0; r < b.rows(); ++r) {
    std::string row;
    for (int c = 0; c < b.cols(); ++c) row += alphadda::Board::cell_char(b.at(r, c));
    g.g.push_back(row);
  }
  g.mover = b.to_move() == alphadda::kFirst ? 'X' : 'O';
  return g;
}

inline bool same_cells(const alphadda::Board& b, const oracle::Grid& g) {
  for (int r = 0; r < b.rows(); ++r)
    for (int c = 0; c < b.cols(); ++c)
      if (alphadda::Board::cell_char(b.at(r, c)) != g.g[r][c]) return false;
  return true;
}

inline int oracle_winner(char r) { return r == 'X' ? 1 : r == 'O' ? -1 : 0; }

}  // namespace fixtures
