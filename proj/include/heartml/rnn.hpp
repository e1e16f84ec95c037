#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "heartml/error.hpp"
#include "heartml/math.hpp"
#include "heartml/preprocess.hpp"
#include "heartml/rng.hpp"

namespace heartml {

/// Elman network parameters in one flat buffer laid out as
/// [W_xh (hidden x input) | W_hh (hidden x hidden) | W_hy (1 x hidden) | b_h (hidden) | b_y].
/// Gradients and RMSprop caches use the same type and layout.
class RNNParams {
 public:
  RNNParams() = default;
  RNNParams(std::size_t hidden, std::size_t input)
      : hidden_(hidden), input_(input), data_(hidden * input + hidden * hidden + hidden + hidden + 1, 0.0) {}

  std::size_t hidden_size() const noexcept { return hidden_; }
  std::size_t input_size() const noexcept { return input_; }

  std::span<double> w_xh() { return block(0, hidden_ * input_); }
  std::span<double> w_hh() { return block(off_hh(), hidden_ * hidden_); }
  std::span<double> w_hy() { return block(off_hy(), hidden_); }
  std::span<double> b_h() { return block(off_bh(), hidden_); }
  double& b_y() { return data_.back(); }

  std::span<const double> w_xh() const { return block(0, hidden_ * input_); }
  std::span<const double> w_hh() const { return block(off_hh(), hidden_ * hidden_); }
  std::span<const double> w_hy() const { return block(off_hy(), hidden_); }
  std::span<const double> b_h() const { return block(off_bh(), hidden_); }
  double b_y() const { return data_.back(); }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  friend bool operator==(const RNNParams&, const RNNParams&) = default;

 private:
  std::size_t off_hh() const { return hidden_ * input_; }
  std::size_t off_hy() const { return off_hh() + hidden_ * hidden_; }
  std::size_t off_bh() const { return off_hy() + hidden_; }
  std::span<double> block(std::size_t off, std::size_t len) { return {data_.data() + off, len}; }
  std::span<const double> block(std::size_t off, std::size_t len) const { return {data_.data() + off, len}; }

  std::size_t hidden_ = 0;
  std::size_t input_ = 1;
  std::vector<double> data_;
};

/// Timestep-major inputs, `input` values per step.
struct Sequence {
  std::size_t input = 1;
  std::vector<double> values;

  std::size_t steps() const noexcept { return input == 0 ? 0 : values.size() / input; }
  std::span<const double> step(std::size_t t) const { return {values.data() + t * input, input}; }
};

/// One scalar timestep per feature, in column order.
inline Sequence as_sequence(std::span<const double> x) { return Sequence{1, std::vector<double>(x.begin(), x.end())}; }

struct ForwardResult {
  std::vector<double> hidden;  // steps x hidden, h_1 .. h_T
  double logit = 0.0;
  double probability = 0.5;  // clamped
};

namespace detail {

inline void check_sequence(const RNNParams& p, const Sequence& seq) {
  if (seq.steps() == 0) throw Error(ErrorKind::EmptySequence, "sequence has no timesteps");
  if (seq.input != p.input_size() || seq.values.size() % seq.input != 0) {
    throw Error(ErrorKind::DimensionMismatch, "sequence input width " + std::to_string(seq.input) +
                                                  " does not match network input " + std::to_string(p.input_size()));
  }
}

}  // namespace detail

/// h_0 = 0; h_t = tanh(W_xh x_t + W_hh h_{t-1} + b_h); p = sigmoid(W_hy h_T + b_y).
inline ForwardResult forward(const RNNParams& p, const Sequence& seq) {
  detail::check_sequence(p, seq);
  const std::size_t H = p.hidden_size();
  const std::size_t I = p.input_size();
  const std::size_t T = seq.steps();
  const auto wxh = p.w_xh();
  const auto whh = p.w_hh();
  const auto bh = p.b_h();

  ForwardResult out;
  out.hidden.assign(T * H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const auto x = seq.step(t);
    const double* prev = t > 0 ? out.hidden.data() + (t - 1) * H : nullptr;
    double* cur = out.hidden.data() + t * H;
    for (std::size_t j = 0; j < H; ++j) {
      double a = bh[j];
      for (std::size_t i = 0; i < I; ++i) a += wxh[j * I + i] * x[i];
      if (prev) {
        for (std::size_t k = 0; k < H; ++k) a += whh[j * H + k] * prev[k];
      }
      cur[j] = std::tanh(a);
    }
  }
  const auto why = p.w_hy();
  const double* last = out.hidden.data() + (T - 1) * H;
  double z = p.b_y();
  for (std::size_t j = 0; j < H; ++j) z += why[j] * last[j];
  out.logit = z;
  out.probability = clamp_probability(sigmoid(z));
  return out;
}

inline double loss(const RNNParams& p, const Sequence& seq, int y) { return bce(forward(p, seq).probability, y); }

/// Backpropagation through time. Gradients are those of the unclamped loss;
/// they differ from the clamped loss only when |logit| > ~27.6.
inline RNNParams backward(const RNNParams& p, const Sequence& seq, int y) {
  const auto fw = forward(p, seq);
  const std::size_t H = p.hidden_size();
  const std::size_t I = p.input_size();
  const std::size_t T = seq.steps();

  RNNParams grad(H, I);
  const double dz = sigmoid(fw.logit) - static_cast<double>(y);
  grad.b_y() = dz;
  const double* last = fw.hidden.data() + (T - 1) * H;
  auto gwhy = grad.w_hy();
  const auto why = p.w_hy();
  std::vector<double> dh(H);
  for (std::size_t j = 0; j < H; ++j) {
    gwhy[j] = dz * last[j];
    dh[j] = dz * why[j];
  }

  auto gwxh = grad.w_xh();
  auto gwhh = grad.w_hh();
  auto gbh = grad.b_h();
  const auto whh = p.w_hh();
  std::vector<double> da(H);
  for (std::size_t t = T; t-- > 0;) {
    const double* h = fw.hidden.data() + t * H;
    const double* prev = t > 0 ? fw.hidden.data() + (t - 1) * H : nullptr;
    const auto x = seq.step(t);
    for (std::size_t j = 0; j < H; ++j) da[j] = dh[j] * (1.0 - h[j] * h[j]);
    for (std::size_t j = 0; j < H; ++j) {
      gbh[j] += da[j];
      for (std::size_t i = 0; i < I; ++i) gwxh[j * I + i] += da[j] * x[i];
      if (prev) {
        for (std::size_t k = 0; k < H; ++k) gwhh[j * H + k] += da[j] * prev[k];
      }
    }
    for (std::size_t k = 0; k < H; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < H; ++j) acc += whh[j * H + k] * da[j];
      dh[k] = acc;
    }
  }
  return grad;
}

/// Largest relative error |a - n| / max(|a|, |n|, 1e-8) between the analytic
/// gradient and central differences with the given step.
inline double grad_check(const RNNParams& params, const Sequence& seq, int y, double step) {
  if (!(step > 0.0)) throw Error(ErrorKind::BadArgument, "finite-difference step must be positive");
  const auto analytic = backward(params, seq, y);
  RNNParams probe = params;
  auto flat = probe.flat();
  double worst = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + step;
    const double up = loss(probe, seq, y);
    flat[i] = saved - step;
    const double down = loss(probe, seq, y);
    flat[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.flat()[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

struct RNNTrainConfig {
  double learning_rate = 0.001;
  double rms_decay = 0.9;
  double epsilon = 1e-8;
  unsigned max_epochs = 200;
  unsigned patience = 10;
  unsigned batch_size = 32;
  unsigned hidden_size = 16;
  std::uint64_t seed = 42;
  double init_scale = 0.1;

  friend bool operator==(const RNNTrainConfig&, const RNNTrainConfig&) = default;
};

inline void validate(const RNNTrainConfig& c) {
  auto bad = [](const std::string& what) { return Error(ErrorKind::BadHyperparameter, what); };
  if (!(c.learning_rate > 0.0)) throw bad("learning_rate must be positive");
  if (!(c.rms_decay > 0.0 && c.rms_decay < 1.0)) throw bad("rms_decay must lie in (0, 1)");
  if (!(c.epsilon > 0.0)) throw bad("epsilon must be positive");
  if (c.max_epochs < 1) throw bad("max_epochs must be at least 1");
  if (c.patience < 1) throw bad("patience must be at least 1");
  if (c.batch_size < 1) throw bad("batch_size must be at least 1");
  if (c.hidden_size < 1) throw bad("hidden_size must be at least 1");
  if (!(c.init_scale >= 0.0)) throw bad("init_scale must be non-negative");
}

/// cache <- rho cache + (1 - rho) g^2;  param <- param - lr g / sqrt(cache + eps).
inline void rmsprop_step(RNNParams& params, RNNParams& cache, const RNNParams& grads, const RNNTrainConfig& cfg) {
  auto p = params.flat();
  auto c = cache.flat();
  const auto g = grads.flat();
  for (std::size_t i = 0; i < p.size(); ++i) {
    c[i] = cfg.rms_decay * c[i] + (1.0 - cfg.rms_decay) * g[i] * g[i];
    p[i] -= cfg.learning_rate * g[i] / std::sqrt(c[i] + cfg.epsilon);
  }
}

/// Patience-based early stopping on a validation loss. Epochs are 1-based.
class EarlyStopping {
 public:
  static constexpr double kMinImprovement = 1e-6;

  explicit EarlyStopping(unsigned patience) : patience_(patience) {}

  /// Records the loss for the next epoch; returns true when it is a new best.
  bool observe(double val_loss) {
    ++epoch_;
    if (best_epoch_ == 0 || best_loss_ - val_loss >= kMinImprovement) {
      best_loss_ = val_loss;
      best_epoch_ = epoch_;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const noexcept { return stale_ >= patience_; }
  unsigned best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }
  unsigned epoch() const noexcept { return epoch_; }

 private:
  unsigned patience_;
  unsigned epoch_ = 0;
  unsigned best_epoch_ = 0;
  unsigned stale_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

struct EpochLoss {
  double train_loss = 0.0;
  double val_loss = 0.0;
  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

struct TrainHistory {
  std::vector<EpochLoss> epochs;
  unsigned best_epoch = 0;
  unsigned stopped_epoch = 0;
  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct RNNTrainResult {
  RNNParams params;
  TrainHistory history;
};

inline std::vector<Sequence> as_sequences(const FeatureMatrix& m) {
  std::vector<Sequence> out;
  out.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out.push_back(as_sequence(m.row(i)));
  return out;
}

inline double mean_loss(const RNNParams& p, std::span<const Sequence> seqs, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < seqs.size(); ++i) total += loss(p, seqs[i], labels[i]);
  return total / static_cast<double>(seqs.size());
}

inline double mean_loss(const RNNParams& p, const FeatureMatrix& m) {
  const auto seqs = as_sequences(m);
  return mean_loss(p, seqs, m.labels);
}

inline double predict_proba_rnn(const RNNParams& p, std::span<const double> x) {
  if (x.size() == 0) throw Error(ErrorKind::EmptySequence, "empty feature vector");
  return forward(p, as_sequence(x)).probability;
}

/// Minibatch RMSprop with early stopping on `val`. Returns the parameters
/// from the best validation epoch.
inline RNNTrainResult train_rnn(const FeatureMatrix& train, const FeatureMatrix& val, const RNNTrainConfig& cfg) {
  validate(cfg);
  if (train.rows == 0 || val.rows == 0) throw Error(ErrorKind::EmptyPartition, "train and validation must be non-empty");
  if (train.cols == 0 || train.cols != val.cols) {
    throw Error(ErrorKind::DimensionMismatch, "train and validation widths differ");
  }

  SplitMix64 rng(cfg.seed);
  RNNParams params(cfg.hidden_size, 1);
  for (auto& w : params.flat()) w = rng.uniform(-cfg.init_scale, cfg.init_scale);
  RNNParams cache(cfg.hidden_size, 1);

  const auto train_seqs = as_sequences(train);
  const auto val_seqs = as_sequences(val);

  RNNTrainResult result{params, {}};
  EarlyStopping stopper(cfg.patience);
  std::vector<std::size_t> order(train.rows);
  for (unsigned epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      RNNParams grad(cfg.hidden_size, 1);
      auto acc = grad.flat();
      for (std::size_t b = start; b < end; ++b) {
        const auto g = backward(params, train_seqs[order[b]], train.labels[order[b]]);
        const auto gf = g.flat();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gf[i];
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto& v : acc) v *= scale;
      rmsprop_step(params, cache, grad, cfg);
    }

    const EpochLoss losses{mean_loss(params, train_seqs, train.labels), mean_loss(params, val_seqs, val.labels)};
    result.history.epochs.push_back(losses);
    if (stopper.observe(losses.val_loss)) result.params = params;
    if (stopper.should_stop()) break;
  }
  result.history.best_epoch = stopper.best_epoch();
  result.history.stopped_epoch = stopper.epoch();
  return result;
}

}  // namespace heartml
