#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "alphadda/evaluator.hpp"
#include "alphadda/game.hpp"
#include "alphadda/random.hpp"

namespace alphadda {

/// Residual policy-value network shape.
///
/// Body: a 3x3 stem convolution followed by `blocks` residual blocks
/// (conv-ReLU-conv, identity skip, ReLU). Value head: 1x1 conv to one plane,
/// ReLU, FC to `value_hidden`, ReLU, FC to one unit, tanh. Policy head: 1x1
/// conv to two planes, ReLU, FC to `policy_hidden`, ReLU, FC to the action
/// count, softmax. Inference-time dropout acts on the two hidden FC layers.
struct NetworkConfig {
  Variant variant = Variant::Connect4;
  int blocks = 2;
  int filters = 256;
  int kernel = 3;
  int value_hidden = 256;
  int policy_hidden = 256;
  int history = 1;

  int input_planes() const { return 2 * history + 1; }
  int rows() const { return variant_info(variant).rows; }
  int cols() const { return variant_info(variant).cols; }
  int area() const { return rows() * cols(); }
  int action_count() const { return variant_info(variant).action_count; }

  static NetworkConfig paper(Variant v) {
    return {v, v == Variant::Othello8 ? 5 : 2, 256, 3, 256, 256, 1};
  }
  static NetworkConfig desk(Variant v) { return {v, 2, 32, 3, 64, 64, 1}; }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Offsets of each tensor inside the flat parameter vector. The order is the
/// serialization order of checkpoints:
///   stem.w [F, C, k, k], stem.b [F],
///   per block: conv1.w [F, F, k, k], conv1.b [F], conv2.w, conv2.b,
///   value.conv.w [1, F], value.conv.b [1], value.fc1.w [Hv, HW], value.fc1.b [Hv],
///   value.fc2.w [1, Hv], value.fc2.b [1],
///   policy.conv.w [2, F], policy.conv.b [2], policy.fc1.w [Hp, 2HW], policy.fc1.b [Hp],
///   policy.fc2.w [A, Hp], policy.fc2.b [A].
/// Every weight matrix is row-major [out][in].
struct ParameterLayout {
  struct Dense {
    std::size_t w = 0, b = 0;
    int out = 0, in = 0;
  };

  Dense stem;
  std::vector<Dense> block_convs;  // 2 per block
  Dense value_conv, value_fc1, value_fc2;
  Dense policy_conv, policy_fc1, policy_fc2;
  std::size_t total = 0;

  explicit ParameterLayout(const NetworkConfig& c) {
    const int k2 = c.kernel * c.kernel;
    stem = add(c.filters, c.input_planes() * k2);
    for (int i = 0; i < 2 * c.blocks; ++i) block_convs.push_back(add(c.filters, c.filters * k2));
    value_conv = add(1, c.filters);
    value_fc1 = add(c.value_hidden, c.area());
    value_fc2 = add(1, c.value_hidden);
    policy_conv = add(2, c.filters);
    policy_fc1 = add(c.policy_hidden, 2 * c.area());
    policy_fc2 = add(c.action_count(), c.policy_hidden);
  }

  std::vector<const Dense*> all() const {
    std::vector<const Dense*> out{&stem};
    for (const auto& d : block_convs) out.push_back(&d);
    for (const Dense* d : {&value_conv, &value_fc1, &value_fc2, &policy_conv, &policy_fc1, &policy_fc2})
      out.push_back(d);
    return out;
  }

 private:
  Dense add(int out, int in) {
    Dense d;
    d.out = out;
    d.in = in;
    d.w = total;
    total += static_cast<std::size_t>(out) * in;
    d.b = total;
    total += out;
    return d;
  }
};

/// One training example: encoded position, search probabilities, winner.
struct TrainingSample {
  PlaneStack planes;
  std::vector<float> pi;
  float c_win = 0.0f;
};

template <typename Scalar>
class PolicyValueNet {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Dense = ParameterLayout::Dense;

  struct Output {
    Scalar value = 0;
    std::vector<Scalar> policy;
    std::vector<Scalar> log_policy;
  };

  /// Units zeroed by inference-time dropout; empty masks mean no dropout.
  struct DropoutMask {
    std::vector<std::uint8_t> value_keep;
    std::vector<std::uint8_t> policy_keep;
  };

  static constexpr double kReluBias = 0.01;

  explicit PolicyValueNet(NetworkConfig config, std::uint64_t seed = 0)
      : config_(config), layout_(config), params_(Vec::Zero(static_cast<Eigen::Index>(layout_.total))) {
    Rng rng(mix_seed(seed, 0x6e6574));
    // He initialization; the two output layers start small so the first
    // updates do not push the ReLU layers below them into a dead state, and
    // ReLU layers get a small positive bias for the same reason.
    for (const Dense* d : layout_.all()) {
      const bool output = d == &layout_.value_fc2 || d == &layout_.policy_fc2;
      std::normal_distribution<double> normal(0.0, std::sqrt((output ? 0.01 : 2.0) / d->in));
      for (std::size_t i = 0; i < static_cast<std::size_t>(d->out) * d->in; ++i)
        params_[static_cast<Eigen::Index>(d->w + i)] = static_cast<Scalar>(normal(rng));
      if (!output)
        for (int j = 0; j < d->out; ++j) params_[static_cast<Eigen::Index>(d->b + j)] = static_cast<Scalar>(kReluBias);
    }
  }

  const NetworkConfig& config() const { return config_; }
  const ParameterLayout& layout() const { return layout_; }
  Vec& parameters() { return params_; }
  const Vec& parameters() const { return params_; }
  std::size_t parameter_count() const { return layout_.total; }

  DropoutMask sample_dropout(double p_drop, Rng& rng) const {
    DropoutMask m;
    if (p_drop <= 0.0) return m;
    std::bernoulli_distribution drop(p_drop);
    m.value_keep.resize(config_.value_hidden);
    m.policy_keep.resize(config_.policy_hidden);
    for (auto& k : m.value_keep) k = drop(rng) ? 0 : 1;
    for (auto& k : m.policy_keep) k = drop(rng) ? 0 : 1;
    return m;
  }

  Output forward(const PlaneStack& input, const DropoutMask& mask = {}) const {
    Trace t;
    return run(input, mask, t);
  }

  /// Loss (c_win - v)^2 - pi . log p for one sample. When `grad` is non-null
  /// the gradient with respect to every parameter is accumulated into it.
  Scalar loss(const TrainingSample& s, Vec* grad = nullptr, const DropoutMask& mask = {}) const {
    Trace t;
    const Output out = run(s.planes, mask, t);
    const Scalar z = static_cast<Scalar>(s.c_win);
    Scalar l = (z - out.value) * (z - out.value);
    Scalar pi_sum = 0;
    for (std::size_t a = 0; a < s.pi.size(); ++a) {
      l -= static_cast<Scalar>(s.pi[a]) * out.log_policy[a];
      pi_sum += static_cast<Scalar>(s.pi[a]);
    }
    if (grad) {
      const Scalar dv_pre = Scalar(-2) * (z - out.value) * (Scalar(1) - out.value * out.value);
      Vec dlogits(config_.action_count());
      for (int a = 0; a < config_.action_count(); ++a)
        dlogits[a] = out.policy[a] * pi_sum - static_cast<Scalar>(s.pi[a]);
      backward(t, mask, dv_pre, dlogits, *grad);
    }
    return l;
  }

  /// Mean loss over `batch`; the gradient of the mean is written to `grad`.
  Scalar batch_loss(const std::vector<const TrainingSample*>& batch, Vec* grad = nullptr) const {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    if (grad) *grad = Vec::Zero(params_.size());
    Scalar total = 0;
    for (const auto* s : batch) total += loss(*s, grad);
    const Scalar inv = Scalar(1) / static_cast<Scalar>(batch.size());
    if (grad) *grad *= inv;
    return total * inv;
  }

 private:
  struct Trace {
    std::vector<Mat> cols;         // im2col inputs of each 3x3 conv
    std::vector<Mat> pre;          // pre-activation outputs of each 3x3 conv
    std::vector<Mat> block_in;     // residual inputs
    Mat body;                      // body output, F x HW
    Mat value_plane, policy_plane; // post-ReLU 1x1 conv outputs
    Vec value_hidden, policy_hidden;  // post-ReLU, post-dropout
    Vec value_hidden_pre, policy_hidden_pre;
  };

  auto weights(const Dense& d) const {
    return Eigen::Map<const Mat>(params_.data() + d.w, d.out, d.in);
  }
  auto bias(const Dense& d) const { return Eigen::Map<const Vec>(params_.data() + d.b, d.out); }
  static auto grad_weights(Vec& g, const Dense& d) { return Eigen::Map<Mat>(g.data() + d.w, d.out, d.in); }
  static auto grad_bias(Vec& g, const Dense& d) { return Eigen::Map<Vec>(g.data() + d.b, d.out); }

  Mat im2col(const Mat& x) const {
    const int k = config_.kernel, pad = k / 2, rows = config_.rows(), cols = config_.cols();
    Mat out = Mat::Zero(x.rows() * k * k, rows * cols);
    for (Eigen::Index c = 0; c < x.rows(); ++c)
      for (int kr = 0; kr < k; ++kr)
        for (int kc = 0; kc < k; ++kc) {
          const Eigen::Index row = (c * k + kr) * k + kc;
          for (int r = 0; r < rows; ++r) {
            const int sr = r + kr - pad;
            if (sr < 0 || sr >= rows) continue;
            for (int cc = 0; cc < cols; ++cc) {
              const int sc = cc + kc - pad;
              if (sc < 0 || sc >= cols) continue;
              out(row, r * cols + cc) = x(c, sr * cols + sc);
            }
          }
        }
    return out;
  }

  Mat col2im(const Mat& dcol, Eigen::Index channels) const {
    const int k = config_.kernel, pad = k / 2, rows = config_.rows(), cols = config_.cols();
    Mat dx = Mat::Zero(channels, rows * cols);
    for (Eigen::Index c = 0; c < channels; ++c)
      for (int kr = 0; kr < k; ++kr)
        for (int kc = 0; kc < k; ++kc) {
          const Eigen::Index row = (c * k + kr) * k + kc;
          for (int r = 0; r < rows; ++r) {
            const int sr = r + kr - pad;
            if (sr < 0 || sr >= rows) continue;
            for (int cc = 0; cc < cols; ++cc) {
              const int sc = cc + kc - pad;
              if (sc < 0 || sc >= cols) continue;
              dx(c, sr * cols + sc) += dcol(row, r * cols + cc);
            }
          }
        }
    return dx;
  }

  Mat conv(const Dense& d, const Mat& col) const {
    Mat z = weights(d) * col;
    z.colwise() += bias(d);
    return z;
  }

  static Mat relu(const Mat& m) { return m.cwiseMax(Scalar(0)); }

  Output run(const PlaneStack& input, const DropoutMask& mask, Trace& t) const {
    if (input.planes != config_.input_planes() || input.rows != config_.rows() || input.cols != config_.cols())
      throw std::invalid_argument("input shape does not match network");
    const int area = config_.area();
    Mat x(input.planes, area);
    for (int p = 0; p < input.planes; ++p)
      for (int i = 0; i < area; ++i) x(p, i) = static_cast<Scalar>(input.data[p * area + i]);

    t.cols.push_back(im2col(x));
    t.pre.push_back(conv(layout_.stem, t.cols.back()));
    Mat a = relu(t.pre.back());
    for (int b = 0; b < config_.blocks; ++b) {
      t.block_in.push_back(a);
      t.cols.push_back(im2col(a));
      t.pre.push_back(conv(layout_.block_convs[2 * b], t.cols.back()));
      t.cols.push_back(im2col(relu(t.pre.back())));
      t.pre.push_back(conv(layout_.block_convs[2 * b + 1], t.cols.back()));
      a = relu(t.pre.back() + t.block_in.back());
    }
    t.body = a;

    Output out;
    // Value head.
    t.value_plane = relu(conv(layout_.value_conv, a));
    const Eigen::Map<const Vec> vflat(t.value_plane.data(), area);
    t.value_hidden_pre = weights(layout_.value_fc1) * vflat + bias(layout_.value_fc1);
    t.value_hidden = t.value_hidden_pre.cwiseMax(Scalar(0));
    apply_mask(t.value_hidden, mask.value_keep);
    const Scalar v_pre = (weights(layout_.value_fc2) * t.value_hidden + bias(layout_.value_fc2))(0);
    out.value = std::tanh(v_pre);

    // Policy head.
    t.policy_plane = relu(conv(layout_.policy_conv, a));
    const Eigen::Map<const Vec> pflat(t.policy_plane.data(), 2 * area);
    t.policy_hidden_pre = weights(layout_.policy_fc1) * pflat + bias(layout_.policy_fc1);
    t.policy_hidden = t.policy_hidden_pre.cwiseMax(Scalar(0));
    apply_mask(t.policy_hidden, mask.policy_keep);
    const Vec logits = weights(layout_.policy_fc2) * t.policy_hidden + bias(layout_.policy_fc2);
    const Scalar mx = logits.maxCoeff();
    const Scalar log_z = mx + std::log((logits.array() - mx).exp().sum());
    out.policy.resize(logits.size());
    out.log_policy.resize(logits.size());
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      out.log_policy[i] = logits[i] - log_z;
      out.policy[i] = std::exp(out.log_policy[i]);
    }
    return out;
  }

  static void apply_mask(Vec& h, const std::vector<std::uint8_t>& keep) {
    if (keep.empty()) return;
    for (Eigen::Index i = 0; i < h.size(); ++i)
      if (!keep[static_cast<std::size_t>(i)]) h[i] = 0;
  }

  void backward(const Trace& t, const DropoutMask& mask, Scalar dv_pre, const Vec& dlogits, Vec& g) const {
    const int area = config_.area();

    // Value head.
    Vec dvh = weights(layout_.value_fc2).transpose() * dv_pre;
    grad_weights(g, layout_.value_fc2) += dv_pre * t.value_hidden.transpose();
    grad_bias(g, layout_.value_fc2)[0] += dv_pre;
    apply_mask(dvh, mask.value_keep);
    dvh = dvh.cwiseProduct((t.value_hidden_pre.array() > 0).matrix().template cast<Scalar>());
    const Eigen::Map<const Vec> vflat(t.value_plane.data(), area);
    grad_weights(g, layout_.value_fc1) += dvh * vflat.transpose();
    grad_bias(g, layout_.value_fc1) += dvh;
    Vec dvflat = weights(layout_.value_fc1).transpose() * dvh;
    Mat dvplane = Eigen::Map<Mat>(dvflat.data(), 1, area);
    dvplane = dvplane.cwiseProduct((t.value_plane.array() > 0).matrix().template cast<Scalar>());
    grad_weights(g, layout_.value_conv) += dvplane * t.body.transpose();
    grad_bias(g, layout_.value_conv) += dvplane.rowwise().sum();
    Mat dbody = weights(layout_.value_conv).transpose() * dvplane;

    // Policy head.
    Vec dph = weights(layout_.policy_fc2).transpose() * dlogits;
    grad_weights(g, layout_.policy_fc2) += dlogits * t.policy_hidden.transpose();
    grad_bias(g, layout_.policy_fc2) += dlogits;
    apply_mask(dph, mask.policy_keep);
    dph = dph.cwiseProduct((t.policy_hidden_pre.array() > 0).matrix().template cast<Scalar>());
    const Eigen::Map<const Vec> pflat(t.policy_plane.data(), 2 * area);
    grad_weights(g, layout_.policy_fc1) += dph * pflat.transpose();
    grad_bias(g, layout_.policy_fc1) += dph;
    Vec dpflat = weights(layout_.policy_fc1).transpose() * dph;
    Mat dpplane = Eigen::Map<Mat>(dpflat.data(), 2, area);
    dpplane = dpplane.cwiseProduct((t.policy_plane.array() > 0).matrix().template cast<Scalar>());
    grad_weights(g, layout_.policy_conv) += dpplane * t.body.transpose();
    grad_bias(g, layout_.policy_conv) += dpplane.rowwise().sum();
    dbody += weights(layout_.policy_conv).transpose() * dpplane;

    // Body, walking the residual blocks backwards.
    Mat da = dbody;
    for (int b = config_.blocks - 1; b >= 0; --b) {
      const int i2 = 2 * b + 2, i1 = 2 * b + 1;  // indices into t.pre / t.cols
      Mat dsum = da.cwiseProduct(((t.pre[i2] + t.block_in[b]).array() > 0).matrix().template cast<Scalar>());
      const Dense& c2 = layout_.block_convs[2 * b + 1];
      grad_weights(g, c2) += dsum * t.cols[i2].transpose();
      grad_bias(g, c2) += dsum.rowwise().sum();
      Mat dr1 = col2im(weights(c2).transpose() * dsum, config_.filters);
      dr1 = dr1.cwiseProduct((t.pre[i1].array() > 0).matrix().template cast<Scalar>());
      const Dense& c1 = layout_.block_convs[2 * b];
      grad_weights(g, c1) += dr1 * t.cols[i1].transpose();
      grad_bias(g, c1) += dr1.rowwise().sum();
      da = dsum + col2im(weights(c1).transpose() * dr1, config_.filters);
    }
    Mat dstem = da.cwiseProduct((t.pre[0].array() > 0).matrix().template cast<Scalar>());
    grad_weights(g, layout_.stem) += dstem * t.cols[0].transpose();
    grad_bias(g, layout_.stem) += dstem.rowwise().sum();
  }

  NetworkConfig config_;
  ParameterLayout layout_;
  Vec params_;
};

using Network = PolicyValueNet<float>;

/// SGD with momentum and L2 weight decay (decay added to the gradient).
template <typename Scalar>
class SgdMomentum {
 public:
  using Vec = typename PolicyValueNet<Scalar>::Vec;

  SgdMomentum(double learning_rate, double momentum, double weight_decay)
      : lr_(learning_rate), momentum_(momentum), weight_decay_(weight_decay) {}

  void step(Vec& params, const Vec& grad) {
    if (velocity_.size() != params.size()) velocity_ = Vec::Zero(params.size());
    velocity_ = static_cast<Scalar>(momentum_) * velocity_ + grad + static_cast<Scalar>(weight_decay_) * params;
    params -= static_cast<Scalar>(lr_) * velocity_;
  }

  void set_learning_rate(double lr) { lr_ = lr; }
  const Vec& velocity() const { return velocity_; }
  Vec& velocity() { return velocity_; }

 private:
  double lr_;
  double momentum_;
  double weight_decay_;
  Vec velocity_;
};

/// Evaluator backed by a network. Dropout masks are drawn from `rng` on
/// every call with p_drop > 0; surviving units are not rescaled.
class NetworkEvaluator final : public Evaluator {
 public:
  explicit NetworkEvaluator(std::shared_ptr<const Network> net) : net_(std::move(net)) {}

  EvalResult evaluate(const Board& state, double p_drop = 0.0, Rng* rng = nullptr) const override {
    if (state.variant() != net_->config().variant) throw std::invalid_argument("network trained for another game");
    typename Network::DropoutMask mask;
    if (p_drop > 0.0) {
      if (!rng) throw std::invalid_argument("dropout evaluation needs an rng");
      mask = net_->sample_dropout(p_drop, *rng);
    }
    const auto out = net_->forward(encode_planes(state), mask);
    EvalResult r;
    r.value = static_cast<double>(out.value);
    r.policy.assign(out.policy.begin(), out.policy.end());
    return r;
  }

  const Network& network() const { return *net_; }
  std::shared_ptr<const Network> shared_network() const { return net_; }

 private:
  std::shared_ptr<const Network> net_;
};

}  // namespace alphadda
