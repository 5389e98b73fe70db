#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace alphadda {

// Disc colors: first player +1, second player -1. A draw outcome is 0.
using Color = int;
inline constexpr Color kFirst = 1;
inline constexpr Color kSecond = -1;

enum class Variant : std::uint8_t { Connect4, Othello6, Othello8 };

struct VariantInfo {
  int rows;
  int cols;
  int action_count;
  std::string_view name;
};

constexpr VariantInfo variant_info(Variant v) {
  switch (v) {
    case Variant::Connect4: return {6, 7, 7, "connect4"};
    case Variant::Othello6: return {6, 6, 37, "othello6"};
    case Variant::Othello8: return {8, 8, 65, "othello8"};
  }
  return {0, 0, 0, ""};
}

constexpr bool is_othello(Variant v) { return v != Variant::Connect4; }

inline std::string_view variant_name(Variant v) { return variant_info(v).name; }

inline Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::Connect4, Variant::Othello6, Variant::Othello8})
    if (variant_info(v).name == name) return v;
  throw std::invalid_argument("unknown game '" + std::string(name) + "'");
}

struct Move {
  enum class Kind : std::uint8_t { Drop, Place, Pass };
  Kind kind = Kind::Pass;
  int row = -1;
  int col = -1;

  static constexpr Move drop(int col) { return {Kind::Drop, -1, col}; }
  static constexpr Move place(int row, int col) { return {Kind::Place, row, col}; }
  static constexpr Move pass() { return {Kind::Pass, -1, -1}; }

  friend constexpr bool operator==(const Move&, const Move&) = default;
};

inline std::string to_string(const Move& m) {
  switch (m.kind) {
    case Move::Kind::Drop: return "drop " + std::to_string(m.col);
    case Move::Kind::Place:
      return std::string(1, static_cast<char>('a' + m.col)) + std::to_string(m.row + 1);
    case Move::Kind::Pass: return "pass";
  }
  return "?";
}

class GameOver : public std::logic_error {
 public:
  GameOver() : std::logic_error("game over") {}
};

class IllegalMove : public std::invalid_argument {
 public:
  explicit IllegalMove(const Move& m)
      : std::invalid_argument("illegal move: " + to_string(m)), move_(m) {}
  const Move& move() const noexcept { return move_; }

 private:
  Move move_;
};

// Policy/action indexing: Connect4 uses the column, Othello uses row*cols+col
// with the pass action at rows*cols.
inline int action_index(Variant v, const Move& m) {
  const auto vi = variant_info(v);
  switch (m.kind) {
    case Move::Kind::Drop: return m.col;
    case Move::Kind::Place: return m.row * vi.cols + m.col;
    case Move::Kind::Pass: return vi.rows * vi.cols;
  }
  return -1;
}

inline Move action_move(Variant v, int action) {
  const auto vi = variant_info(v);
  if (action < 0 || action >= vi.action_count)
    throw std::out_of_range("action index out of range");
  if (!is_othello(v)) return Move::drop(action);
  if (action == vi.rows * vi.cols) return Move::pass();
  return Move::place(action / vi.cols, action % vi.cols);
}

/// Immutable game position. Cells are stored row-major from the top-left,
/// holding +1 (first player, 'X'), -1 (second player, 'O') or 0.
class Board {
 public:
  static constexpr int kMaxCells = 64;

  Board() = default;

  static Board initial(Variant v) {
    Board b;
    b.variant_ = v;
    if (is_othello(v)) {
      const int lo = b.rows() / 2 - 1;
      const int hi = lo + 1;
      b.set(lo, lo, kSecond);
      b.set(hi, hi, kSecond);
      b.set(lo, hi, kFirst);
      b.set(hi, lo, kFirst);
    }
    return b;
  }

  static Board from_cells(Variant v, const std::vector<int>& cells, Color to_move, int turn_index) {
    Board b;
    b.variant_ = v;
    if (static_cast<int>(cells.size()) != b.cell_count())
      throw std::invalid_argument("cell count does not match variant");
    for (int i = 0; i < b.cell_count(); ++i) {
      if (cells[i] < -1 || cells[i] > 1) throw std::invalid_argument("bad cell value");
      b.cells_[i] = static_cast<std::int8_t>(cells[i]);
    }
    if (to_move != kFirst && to_move != kSecond) throw std::invalid_argument("bad side to move");
    b.to_move_ = static_cast<std::int8_t>(to_move);
    b.turn_index_ = turn_index;
    return b;
  }

  Variant variant() const noexcept { return variant_; }
  int rows() const noexcept { return variant_info(variant_).rows; }
  int cols() const noexcept { return variant_info(variant_).cols; }
  int cell_count() const noexcept { return rows() * cols(); }
  int action_count() const noexcept { return variant_info(variant_).action_count; }
  Color to_move() const noexcept { return to_move_; }
  int turn_index() const noexcept { return turn_index_; }

  int at(int r, int c) const noexcept { return cells_[r * cols() + c]; }
  int at(int idx) const noexcept { return cells_[idx]; }
  bool on_board(int r, int c) const noexcept { return r >= 0 && r < rows() && c >= 0 && c < cols(); }

  int count(Color c) const noexcept {
    int n = 0;
    for (int i = 0; i < cell_count(); ++i) n += cells_[i] == c;
    return n;
  }

  friend bool operator==(const Board& a, const Board& b) {
    return a.variant_ == b.variant_ && a.to_move_ == b.to_move_ &&
           a.turn_index_ == b.turn_index_ && a.cells_ == b.cells_;
  }

  // Same discs and side to move; ignores the turn counter.
  bool same_position(const Board& o) const {
    return variant_ == o.variant_ && to_move_ == o.to_move_ && cells_ == o.cells_;
  }

  // -- rules -------------------------------------------------------------

  /// Number of discs `mover` would flip by placing at (r, c); 0 if illegal.
  int flips_at(int r, int c, Color mover) const noexcept {
    if (at(r, c) != 0) return 0;
    int total = 0;
    for (const auto& [dr, dc] : kDirections) {
      int n = 0;
      int rr = r + dr, cc = c + dc;
      while (on_board(rr, cc) && at(rr, cc) == -mover) {
        ++n;
        rr += dr;
        cc += dc;
      }
      if (n > 0 && on_board(rr, cc) && at(rr, cc) == mover) total += n;
    }
    return total;
  }

  bool has_placement(Color mover) const noexcept {
    for (int r = 0; r < rows(); ++r)
      for (int c = 0; c < cols(); ++c)
        if (flips_at(r, c, mover) > 0) return true;
    return false;
  }

  /// Winner color, 0 for a draw, or nullopt while the game is running.
  std::optional<int> outcome() const {
    if (!is_othello(variant_)) {
      if (Color w = connect4_winner(); w != 0) return w;
      for (int c = 0; c < cols(); ++c)
        if (at(0, c) == 0) return std::nullopt;
      return 0;
    }
    if (has_placement(to_move_) || has_placement(-to_move_)) return std::nullopt;
    const int diff = count(kFirst) - count(kSecond);
    return diff > 0 ? kFirst : diff < 0 ? kSecond : 0;
  }

  bool is_terminal() const { return outcome().has_value(); }

  std::vector<Move> valid_moves() const {
    if (is_terminal()) throw GameOver();
    return legal_moves_unchecked();
  }

  /// Legal moves assuming the position is not terminal.
  std::vector<Move> legal_moves_unchecked() const {
    std::vector<Move> moves;
    if (!is_othello(variant_)) {
      for (int c = 0; c < cols(); ++c)
        if (at(0, c) == 0) moves.push_back(Move::drop(c));
      return moves;
    }
    for (int r = 0; r < rows(); ++r)
      for (int c = 0; c < cols(); ++c)
        if (flips_at(r, c, to_move_) > 0) moves.push_back(Move::place(r, c));
    if (moves.empty()) moves.push_back(Move::pass());
    return moves;
  }

  Board apply(const Move& m) const {
    if (is_terminal()) throw GameOver();
    Board next = *this;
    if (!is_othello(variant_)) {
      if (m.kind != Move::Kind::Drop || m.col < 0 || m.col >= cols() || at(0, m.col) != 0)
        throw IllegalMove(m);
      int r = rows() - 1;
      while (at(r, m.col) != 0) --r;
      next.set(r, m.col, to_move_);
    } else if (m.kind == Move::Kind::Pass) {
      if (has_placement(to_move_)) throw IllegalMove(m);
    } else {
      if (m.kind != Move::Kind::Place || !on_board(m.row, m.col) ||
          flips_at(m.row, m.col, to_move_) == 0)
        throw IllegalMove(m);
      next.place_and_flip(m.row, m.col, to_move_);
    }
    next.to_move_ = static_cast<std::int8_t>(-to_move_);
    ++next.turn_index_;
    return next;
  }

  // -- text format ---------------------------------------------------------

  /// Header "variant to_move turn_index", then one line per row of '.', 'X', 'O'.
  std::string to_text() const {
    std::ostringstream os;
    os << variant_name(variant_) << ' ' << static_cast<int>(to_move_) << ' ' << turn_index_ << '\n';
    for (int r = 0; r < rows(); ++r) {
      for (int c = 0; c < cols(); ++c) os << cell_char(at(r, c));
      os << '\n';
    }
    return os.str();
  }

  static Board from_text(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string name;
    int to_move = 0, turn = 0;
    if (!(is >> name >> to_move >> turn)) throw std::invalid_argument("bad board header");
    const Variant v = parse_variant(name);
    const auto vi = variant_info(v);
    std::vector<int> cells;
    std::string line;
    std::getline(is, line);
    for (int r = 0; r < vi.rows; ++r) {
      if (!std::getline(is, line) || static_cast<int>(line.size()) < vi.cols)
        throw std::invalid_argument("bad board row " + std::to_string(r));
      for (int c = 0; c < vi.cols; ++c) {
        switch (line[c]) {
          case '.': cells.push_back(0); break;
          case 'X': cells.push_back(kFirst); break;
          case 'O': cells.push_back(kSecond); break;
          default: throw std::invalid_argument("bad board character");
        }
      }
    }
    return from_cells(v, cells, to_move, turn);
  }

  static char cell_char(int v) { return v == kFirst ? 'X' : v == kSecond ? 'O' : '.'; }

 private:
  static constexpr std::array<std::pair<int, int>, 8> kDirections{
      {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};

  void set(int r, int c, int v) noexcept { cells_[r * cols() + c] = static_cast<std::int8_t>(v); }

  void place_and_flip(int r, int c, Color mover) noexcept {
    for (const auto& [dr, dc] : kDirections) {
      int n = 0;
      int rr = r + dr, cc = c + dc;
      while (on_board(rr, cc) && at(rr, cc) == -mover) {
        ++n;
        rr += dr;
        cc += dc;
      }
      if (n == 0 || !on_board(rr, cc) || at(rr, cc) != mover) continue;
      for (int k = 1; k <= n; ++k) set(r + k * dr, c + k * dc, mover);
    }
    set(r, c, mover);
  }

  Color connect4_winner() const noexcept {
    static constexpr std::array<std::pair<int, int>, 4> kLines{{{0, 1}, {1, 0}, {1, 1}, {1, -1}}};
    for (int r = 0; r < rows(); ++r)
      for (int c = 0; c < cols(); ++c) {
        const int v = at(r, c);
        if (v == 0) continue;
        for (const auto& [dr, dc] : kLines) {
          const int er = r + 3 * dr, ec = c + 3 * dc;
          if (!on_board(er, ec)) continue;
          if (at(r + dr, c + dc) == v && at(r + 2 * dr, c + 2 * dc) == v && at(er, ec) == v)
            return v;
        }
      }
    return 0;
  }

  Variant variant_ = Variant::Connect4;
  std::int8_t to_move_ = kFirst;
  int turn_index_ = 0;
  std::array<std::int8_t, kMaxCells> cells_{};
};

// Free-function surface.

inline Board new_game(Variant v) { return Board::initial(v); }
inline std::vector<Move> valid_moves(const Board& b) { return b.valid_moves(); }
inline Board apply_move(const Board& b, const Move& m) { return b.apply(m); }
inline std::optional<int> outcome(const Board& b) { return b.outcome(); }

// -- symmetries --------------------------------------------------------------

/// Cell permutation for symmetry `k`: Connect4 has {identity, mirror};
/// square boards have 4 rotations times an optional transpose.
inline std::pair<int, int> map_cell(Variant v, int k, int r, int c) {
  const auto vi = variant_info(v);
  if (!is_othello(v)) return k == 0 ? std::pair{r, c} : std::pair{r, vi.cols - 1 - c};
  const int n = vi.rows;
  if (k >= 4) std::swap(r, c);
  for (int i = 0; i < k % 4; ++i) {
    const int nr = c, nc = n - 1 - r;
    r = nr;
    c = nc;
  }
  return {r, c};
}

inline int symmetry_count(Variant v) { return is_othello(v) ? 8 : 2; }

inline Board transform(const Board& b, int k) {
  std::vector<int> cells(b.cell_count());
  for (int r = 0; r < b.rows(); ++r)
    for (int c = 0; c < b.cols(); ++c) {
      const auto [nr, nc] = map_cell(b.variant(), k, r, c);
      cells[nr * b.cols() + nc] = b.at(r, c);
    }
  return Board::from_cells(b.variant(), cells, b.to_move(), b.turn_index());
}

inline int transform_action(Variant v, int k, int action) {
  const Move m = action_move(v, action);
  switch (m.kind) {
    case Move::Kind::Drop: return map_cell(v, k, 0, m.col).second;
    case Move::Kind::Place: {
      const auto [r, c] = map_cell(v, k, m.row, m.col);
      return action_index(v, Move::place(r, c));
    }
    case Move::Kind::Pass: return action;
  }
  return action;
}

template <typename T>
std::vector<std::pair<Board, std::vector<T>>> symmetries(const Board& b, const std::vector<T>& policy) {
  if (static_cast<int>(policy.size()) != b.action_count())
    throw std::invalid_argument("policy length does not match action count");
  std::vector<std::pair<Board, std::vector<T>>> out;
  for (int k = 0; k < symmetry_count(b.variant()); ++k) {
    std::vector<T> p(policy.size());
    for (int a = 0; a < b.action_count(); ++a) p[transform_action(b.variant(), k, a)] = policy[a];
    out.emplace_back(transform(b, k), std::move(p));
  }
  return out;
}

// -- network input -------------------------------------------------------------

/// Planes laid out [plane][row][col]: T first-player occupancy planes
/// (oldest first), T second-player planes, then a constant side-to-move plane.
struct PlaneStack {
  int planes = 0;
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  float at(int p, int r, int c) const { return data[(p * rows + r) * cols + c]; }
  friend bool operator==(const PlaneStack&, const PlaneStack&) = default;
};

inline PlaneStack encode_planes(const std::vector<Board>& history, Color to_move, int history_length = 1) {
  if (static_cast<int>(history.size()) != history_length || history.empty())
    throw std::invalid_argument("history length must equal T=" + std::to_string(history_length));
  const Board& ref = history.front();
  PlaneStack ps{2 * history_length + 1, ref.rows(), ref.cols(), {}};
  const int area = ps.rows * ps.cols;
  ps.data.assign(static_cast<std::size_t>(ps.planes) * area, 0.0f);
  for (int t = 0; t < history_length; ++t) {
    const Board& b = history[t];
    if (b.variant() != ref.variant()) throw std::invalid_argument("mixed variants in history");
    for (int i = 0; i < area; ++i) {
      if (b.at(i) == kFirst) ps.data[t * area + i] = 1.0f;
      if (b.at(i) == kSecond) ps.data[(history_length + t) * area + i] = 1.0f;
    }
  }
  std::fill(ps.data.begin() + 2 * history_length * area, ps.data.end(), static_cast<float>(to_move));
  return ps;
}

inline PlaneStack encode_planes(const Board& b) { return encode_planes({b}, b.to_move()); }

}  // namespace alphadda
