#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "alphadda/evaluator.hpp"
#include "alphadda/game.hpp"
#include "alphadda/search.hpp"
#include "alphadda/value_matching.hpp"

namespace alphadda {

/// Root values v_n observed at the adjusting agent's own turns, oldest first.
struct ValueHistory {
  std::vector<double> values;
  Color c_dda = kFirst;

  void record(double v) { values.push_back(std::clamp(v, -1.0, 1.0)); }
};

/// Mean of the last n_h recorded values (all of them when fewer exist); 0
/// for an empty history.
inline double mean_value(const ValueHistory& history, int n_h) {
  const auto& v = history.values;
  if (v.empty() || n_h <= 0) return 0.0;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(n_h), v.size());
  double sum = 0.0;
  for (std::size_t i = v.size() - k; i < v.size(); ++i) sum += v[i];
  return sum / static_cast<double>(k);
}

struct Dda1Params {
  int n_h = 4;
  double a_sim = 2.0;
  double b_sim0 = -1.4;
  int n_max = 200;

  static Dda1Params defaults(Variant v) {
    switch (v) {
      case Variant::Connect4: return {4, 2.0, -1.4, 200};
      case Variant::Othello6: return {3, 1.6, -1.5, 200};
      case Variant::Othello8: return {3, 2.8, -1.4, 400};
    }
    return {};
  }
};

struct Dda2Params {
  int n_h = 1;
  double a_drop = 5.0;
  double p_drop0 = -0.4;
  double p_max = 0.95;

  static Dda2Params defaults(Variant v) {
    switch (v) {
      case Variant::Connect4: return {1, 5.0, -0.4, 0.95};
      case Variant::Othello6: return {2, 1.0, 0.0, 0.95};
      case Variant::Othello8: return {3, 10.0, -0.9, 0.95};
    }
    return {};
  }
};

struct Dda3Params {
  int n_h = 2;
  double c_explore = 0.5;

  static Dda3Params defaults(Variant v) {
    switch (v) {
      case Variant::Connect4: return {2, 0.5};
      case Variant::Othello6: return {4, 1.0};
      case Variant::Othello8: return {1, 0.75};
    }
    return {};
  }
};

/// ceil(10^(-a_sim * (v_bar * c_dda + b_sim0))), clamped to [1, n_max].
inline int dda1_num_sims(double v_bar, Color c_dda, const Dda1Params& p) {
  const double exponent = -p.a_sim * (v_bar * c_dda + p.b_sim0);
  const double raw = std::pow(10.0, exponent);
  if (!(raw < static_cast<double>(p.n_max))) return std::max(1, p.n_max);
  // Relative guard so that exact powers of ten are not pushed up a step by
  // representation error in the exponent.
  const int n = static_cast<int>(std::ceil(raw * (1.0 - 1e-12)));
  return std::clamp(n, 1, std::max(1, p.n_max));
}

/// a_drop * (v_bar * c_dda + p_drop0), clamped to [0, p_max].
inline double dda2_dropout_prob(double v_bar, Color c_dda, const Dda2Params& p) {
  return std::clamp(p.a_drop * (v_bar * c_dda + p.p_drop0), 0.0, p.p_max);
}

enum class DdaKind { Dda1, Dda2, Dda3 };

inline std::string to_string(DdaKind k) {
  switch (k) {
    case DdaKind::Dda1: return "DDA1";
    case DdaKind::Dda2: return "DDA2";
    case DdaKind::Dda3: return "DDA3";
  }
  return "?";
}

struct DdaConfig {
  DdaKind kind = DdaKind::Dda1;
  Dda1Params dda1;
  Dda2Params dda2;
  Dda3Params dda3;

  static DdaConfig defaults(DdaKind kind, Variant v) {
    return {kind, Dda1Params::defaults(v), Dda2Params::defaults(v), Dda3Params::defaults(v)};
  }

  int n_h() const {
    switch (kind) {
      case DdaKind::Dda1: return dda1.n_h;
      case DdaKind::Dda2: return dda2.n_h;
      case DdaKind::Dda3: return dda3.n_h;
    }
    return 1;
  }
};

struct DdaDiagnostics {
  double v_n = 0.0;
  double v_bar = 0.0;
  std::optional<int> n_sim;
  std::optional<double> p_drop;
};

struct DdaDecision {
  Move move;
  DdaDiagnostics diagnostics;
};

/// One move of an adjusting agent. Records the undamaged root value into
/// `history`, then searches with the knob derived from the running mean.
inline DdaDecision dda_decide_move(const DdaConfig& config, const Board& state, ValueHistory& history,
                                   const Evaluator& evaluator, const SearchParams& base, Rng& rng) {
  if (state.is_terminal()) throw GameOver();
  if (state.to_move() != history.c_dda) throw std::logic_error("not the adjusting agent's turn");

  DdaDecision out;
  out.diagnostics.v_n = std::clamp(evaluator.evaluate(state, 0.0, nullptr).value, -1.0, 1.0);
  history.record(out.diagnostics.v_n);
  const double v_bar = mean_value(history, config.n_h());
  out.diagnostics.v_bar = v_bar;

  SearchParams params = base;
  std::optional<Dda3Hook> hook;
  switch (config.kind) {
    case DdaKind::Dda1:
      params.n_sim = dda1_num_sims(v_bar, history.c_dda, config.dda1);
      out.diagnostics.n_sim = params.n_sim;
      break;
    case DdaKind::Dda2:
      params.p_drop = dda2_dropout_prob(v_bar, history.c_dda, config.dda2);
      out.diagnostics.p_drop = params.p_drop;
      break;
    case DdaKind::Dda3:
      hook = Dda3Hook{v_bar, history.c_dda, config.dda3.c_explore};
      out.diagnostics.n_sim = params.n_sim;
      break;
  }
  out.move = decide_move_alphazero(state, evaluator, params, rng, hook ? &*hook : nullptr);
  return out;
}

}  // namespace alphadda
