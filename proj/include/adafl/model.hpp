#pragma once

// Fully connected ReLU network with a softmax/cross-entropy head, kept as a
// single flat parameter buffer so that flattening, aggregation and distances
// are plain vector operations.
//
// Buffer layout (layer-major): W_0 row-major (outputs x inputs), b_0, W_1, b_1, ...

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adafl/dataset.hpp"
#include "adafl/error.hpp"
#include "adafl/random.hpp"

namespace adafl {

/// Flat model parameters.
struct ParamVector {
  Eigen::VectorXd values;

  ParamVector() = default;
  explicit ParamVector(Eigen::Index n) : values(Eigen::VectorXd::Zero(n)) {}
  explicit ParamVector(Eigen::VectorXd v) : values(std::move(v)) {}
  ParamVector(std::initializer_list<double> init) : values(static_cast<Eigen::Index>(init.size())) {
    Eigen::Index i = 0;
    for (double x : init) values[i++] = x;
  }

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }

  /// Bit-level equality (no tolerance).
  bool operator==(const ParamVector& other) const {
    return values.size() == other.values.size() && values == other.values;
  }
};

/// ‖a − b‖₂ over the full parameter vector.
inline double euclidean_distance(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) {
    throw DimensionError("euclidean_distance: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
  return (a.values - b.values).norm();
}

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LossAndGradient {
  double loss = 0.0;
  ParamVector gradient;
};

class MlpModel {
 public:
  using WeightsView = Eigen::Map<RowMajorMatrix>;
  using ConstWeightsView = Eigen::Map<const RowMajorMatrix>;
  using BiasView = Eigen::Map<Eigen::VectorXd>;
  using ConstBiasView = Eigen::Map<const Eigen::VectorXd>;

  /// `layer_sizes` = {inputs, hidden..., outputs}; all parameters start at zero.
  explicit MlpModel(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw DimensionError("MlpModel needs at least one layer (input and output sizes)");
    offsets_.reserve(sizes_.size());
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw DimensionError("MlpModel layer sizes must be positive");
      offsets_.push_back(total);
      total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    offsets_.push_back(total);
    params_ = ParamVector(static_cast<Eigen::Index>(total));
  }

  /// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero biases.
  static MlpModel glorot(std::vector<std::size_t> layer_sizes, Rng& rng) {
    MlpModel model(std::move(layer_sizes));
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
      const double fan_in = static_cast<double>(model.sizes_[l]);
      const double fan_out = static_cast<double>(model.sizes_[l + 1]);
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      auto w = model.weights(l);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
    }
    return model;
  }

  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  const ParamVector& parameters() const { return params_; }

  void set_parameters(const ParamVector& p) {
    if (p.size() != params_.size()) {
      throw DimensionError("set_parameters: expected " + std::to_string(params_.size()) + " values, got " +
                           std::to_string(p.size()));
    }
    params_.values = p.values;
  }

  WeightsView weights(std::size_t layer) {
    return {params_.values.data() + offsets_[layer], rows(layer), cols(layer)};
  }
  ConstWeightsView weights(std::size_t layer) const {
    return {params_.values.data() + offsets_[layer], rows(layer), cols(layer)};
  }
  BiasView bias(std::size_t layer) {
    return {params_.values.data() + offsets_[layer] + rows(layer) * cols(layer), rows(layer)};
  }
  ConstBiasView bias(std::size_t layer) const {
    return {params_.values.data() + offsets_[layer] + rows(layer) * cols(layer), rows(layer)};
  }

  /// Start of layer `layer`'s block in the flat buffer; `layer == num_layers()` gives the total.
  std::size_t layer_offset(std::size_t layer) const { return offsets_[layer]; }

  /// Class probabilities, one row per sample.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& features) const {
    check_features(features);
    Eigen::MatrixXd act = features;
    for (std::size_t l = 0; l < num_layers(); ++l) {
      Eigen::MatrixXd z = act * weights(l).transpose();
      z.rowwise() += bias(l).transpose();
      if (l + 1 < num_layers()) {
        act = z.cwiseMax(0.0);
      } else {
        act = softmax_rows(z);
      }
    }
    return act;
  }

  /// Mean cross-entropy over the batch and its gradient with respect to the flat parameters.
  LossAndGradient loss_and_gradient(const Eigen::MatrixXd& features, std::span<const int> labels) const {
    check_features(features);
    const auto n = features.rows();
    if (n == 0) throw DimensionError("loss_and_gradient: empty batch");
    if (static_cast<std::size_t>(n) != labels.size()) {
      throw DimensionError("loss_and_gradient: " + std::to_string(n) + " rows but " +
                           std::to_string(labels.size()) + " labels");
    }
    const std::size_t layers = num_layers();

    // Forward pass, keeping each layer's input and pre-activation.
    std::vector<Eigen::MatrixXd> inputs(layers);
    std::vector<Eigen::MatrixXd> pre(layers);
    Eigen::MatrixXd act = features;
    for (std::size_t l = 0; l < layers; ++l) {
      inputs[l] = act;
      pre[l] = act * weights(l).transpose();
      pre[l].rowwise() += bias(l).transpose();
      if (l + 1 < layers) act = pre[l].cwiseMax(0.0);
    }

    const Eigen::MatrixXd& logits = pre.back();
    Eigen::MatrixXd delta = softmax_rows(logits);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int y = labels[static_cast<std::size_t>(i)];
      if (y < 0 || static_cast<std::size_t>(y) >= output_size()) {
        throw DimensionError("loss_and_gradient: label " + std::to_string(y) + " outside the output layer");
      }
      const double m = logits.row(i).maxCoeff();
      const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
      loss += lse - logits(i, y);
      delta(i, y) -= 1.0;
    }
    loss /= static_cast<double>(n);
    delta /= static_cast<double>(n);

    LossAndGradient out{loss, ParamVector(static_cast<Eigen::Index>(parameter_count()))};
    for (std::size_t l = layers; l-- > 0;) {
      const Eigen::Index r = rows(l);
      const Eigen::Index c = cols(l);
      Eigen::Map<RowMajorMatrix> gw(out.gradient.values.data() + offsets_[l], r, c);
      Eigen::Map<Eigen::VectorXd> gb(out.gradient.values.data() + offsets_[l] + r * c, r);
      gw.noalias() = delta.transpose() * inputs[l];
      gb = delta.colwise().sum().transpose();
      if (!out.gradient.values.segment(static_cast<Eigen::Index>(offsets_[l]), r * c + r).allFinite()) {
        throw NumericError("non-finite gradient in layer " + std::to_string(l));
      }
      if (l > 0) {
        Eigen::MatrixXd back = delta * weights(l);
        delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
      }
    }
    return out;
  }

  bool operator==(const MlpModel& other) const { return sizes_ == other.sizes_ && params_ == other.params_; }

 private:
  Eigen::Index rows(std::size_t layer) const { return static_cast<Eigen::Index>(sizes_[layer + 1]); }
  Eigen::Index cols(std::size_t layer) const { return static_cast<Eigen::Index>(sizes_[layer]); }

  void check_features(const Eigen::MatrixXd& features) const {
    if (static_cast<std::size_t>(features.cols()) != input_size()) {
      throw DimensionError("feature dimension " + std::to_string(features.cols()) +
                           " does not match input layer size " + std::to_string(input_size()));
    }
  }

  static Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd p = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
  }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  ParamVector params_;
};

inline ParamVector flatten(const MlpModel& model) { return model.parameters(); }

/// Model of the given architecture holding `params`.
inline MlpModel unflatten(const ParamVector& params, const std::vector<std::size_t>& layer_sizes) {
  MlpModel model(layer_sizes);
  model.set_parameters(params);
  return model;
}

struct OptimizerState {
  ParamVector velocity;
  double momentum = 0.0;
  double learning_rate = 0.01;

  OptimizerState(std::size_t parameter_count, double learning_rate_, double momentum_)
      : velocity(static_cast<Eigen::Index>(parameter_count)), momentum(momentum_), learning_rate(learning_rate_) {
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw InvalidArgument("learning rate must be finite and nonnegative");
    }
  }
};

/// Gradient hook that leaves the gradient alone.
struct NoCorrection {
  void operator()(const ParamVector& /*params*/, ParamVector& /*gradient*/) const {}
};

/// One momentum SGD step: v ← μ·v + g, w ← w − η·v. `correct(w, g)` may adjust
/// the batch gradient in place before it enters the velocity. Returns the
/// batch loss measured before the step.
template <typename Correction = NoCorrection>
double sgd_step(MlpModel& model, OptimizerState& opt, const Eigen::MatrixXd& features,
                std::span<const int> labels, const Correction& correct = {}) {
  if (opt.velocity.size() != model.parameter_count()) {
    throw DimensionError("optimizer velocity length does not match the model");
  }
  auto [loss, grad] = model.loss_and_gradient(features, labels);
  correct(model.parameters(), grad);
  opt.velocity.values = opt.momentum * opt.velocity.values + grad.values;
  ParamVector next(model.parameters().values - opt.learning_rate * opt.velocity.values);
  if (!next.values.allFinite()) throw NumericError("sgd_step produced non-finite parameters");
  model.set_parameters(next);
  return loss;
}

/// Fraction of samples whose argmax prediction equals the label.
inline double evaluate(const MlpModel& model, const Dataset& data) {
  if (data.empty()) throw InvalidArgument("evaluate: empty dataset");
  constexpr Eigen::Index kChunk = 1024;
  std::size_t correct = 0;
  const Eigen::Index n = data.features.rows();
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, n - start);
    const Eigen::MatrixXd probs = model.predict(data.features.middleRows(start, len));
    for (Eigen::Index i = 0; i < len; ++i) {
      Eigen::Index best = 0;
      probs.row(i).maxCoeff(&best);
      if (best == data.labels[static_cast<std::size_t>(start + i)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace adafl
