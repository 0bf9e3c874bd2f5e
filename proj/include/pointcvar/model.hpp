#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pointcvar/core.hpp"
#include "pointcvar/rng.hpp"

namespace pcvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Squareplus with a narrow hinge, (x + sqrt(x^2 + b)) / 2 with b = 0.01:
/// smooth and monotone, close to a ReLU outside |x| of about 0.1. The usual
/// b = 4 is nearly affine over the range unit-sphere coordinates produce.
inline constexpr double kActivationHinge = 0.01;
inline double activation(double x) { return 0.5 * (x + std::sqrt(x * x + kActivationHinge)); }
inline double activation_grad(double x) { return 0.5 * (1.0 + x / std::sqrt(x * x + kActivationHinge)); }

/// Affine map applied to row vectors: out = in * W + b.
struct Dense {
  Matrix W;  // fan_in x fan_out
  Vector b;  // fan_out

  friend bool operator==(const Dense& a, const Dense& b) {
    return a.W.rows() == b.W.rows() && a.W.cols() == b.W.cols() && a.W == b.W && a.b.size() == b.b.size() &&
           a.b == b.b;
  }
};

struct ModelArch {
  std::vector<std::size_t> trunk;  // per-point widths, e.g. {32, 64, 128}
  std::vector<std::size_t> head;   // hidden widths after pooling, e.g. {64}
  std::size_t n_classes = 0;

  friend bool operator==(const ModelArch&, const ModelArch&) = default;
};

/// Trainable parameters (or gradients of the same shape).
struct ParamSet {
  std::vector<Dense> trunk;
  std::vector<Dense> head;

  void set_zero();
  ParamSet& operator+=(const ParamSet& o);
  ParamSet& operator*=(double s);
  /// axpy: this += s * o
  void add_scaled(const ParamSet& o, double s);
  std::size_t size() const;
  /// Visits every scalar in a fixed order (trunk then head, W then b,
  /// column-major within W).
  template <class F>
  void for_each(F&& f);

  friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

/// PointNet-style classifier: a shared per-point trunk (affine + squareplus
/// per layer), channel-wise max pool, and a dense head ending in C logits.
///
/// Point-feature layers are the input cloud plus every trunk output except
/// the last one (which only feeds the pool), so widths {32, 64, 128} give
/// three layers: the coordinates, the 32-dim and the 64-dim features.
class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(ModelArch arch, ParamSet params);

  const ModelArch& arch() const noexcept { return arch_; }
  const ParamSet& params() const noexcept { return params_; }
  ParamSet& mutable_params() noexcept { return params_; }

  std::size_t n_classes() const noexcept { return arch_.n_classes; }
  std::size_t n_point_feature_layers() const noexcept { return arch_.trunk.size(); }
  /// Width of designated point-feature layer l (3 for the input).
  std::size_t point_feature_width(std::size_t l) const;

  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;

 private:
  ModelArch arch_;
  ParamSet params_;
};

inline constexpr std::size_t kDefaultTrunk[] = {32, 64, 128};
inline constexpr std::size_t kDefaultHead[] = {64};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
ClassifierModel build_classifier(std::span<const std::size_t> widths, std::size_t n_classes, Rng& rng,
                                 std::span<const std::size_t> head_widths = kDefaultHead);

struct FeatureTrace {
  Matrix input;                     // N x 3, equals the cloud coordinates
  std::vector<Matrix> trunk_pre;    // per trunk layer, N x width
  std::vector<Matrix> trunk_out;    // activations of trunk_pre
  Vector pooled;                    // channel max of the last trunk output
  std::vector<Eigen::Index> argmax; // pooled channel -> winning row (lowest on ties)
  std::vector<Vector> head_in;      // input to each head layer
  std::vector<Vector> head_pre;     // pre-activation of each head layer
  Vector logits;

  std::size_t n_points() const { return static_cast<std::size_t>(input.rows()); }
  /// Number of designated point-feature layers (L').
  std::size_t n_point_feature_layers() const { return trunk_out.size(); }
  const Matrix& point_feature(std::size_t l) const { return l == 0 ? input : trunk_out[l - 1]; }
};

Matrix to_matrix(const PointCloud& cloud);

FeatureTrace forward_trace(const ClassifierModel& model, const PointCloud& cloud);
FeatureTrace forward_trace(const ClassifierModel& model, const Matrix& coords);

/// Logits computed from the features of designated layer l onward, treating
/// them as free inputs. Used for finite-difference checks of point gradients.
Vector logits_from_point_features(const ClassifierModel& model, std::size_t l, const Matrix& features);

/// A differentiable scalar of the trace, given by its value and its
/// gradient with respect to the logits.
struct ScoreSeed {
  double value = 0.0;
  Vector dlogits;
};

/// d(score)/dF^(l) for each designated layer; rows of points that win no
/// pooled channel are exactly zero.
std::vector<Matrix> backward_point_gradients(const ClassifierModel& model, const FeatureTrace& trace,
                                             const ScoreSeed& seed);

/// Parameter gradient of the score (and, optionally, the point gradients).
ParamSet backward_param_gradients(const ClassifierModel& model, const FeatureTrace& trace, const ScoreSeed& seed,
                                  std::vector<Matrix>* point_grads = nullptr);

/// Index of the largest value, lowest index on ties.
std::size_t argmax_lowest(std::span<const double> values);
std::size_t argmax_lowest(const Vector& values);

std::size_t predict_label(const ClassifierModel& model, const PointCloud& cloud);

/// Softmax cross-entropy of logits against `target`, with its logit gradient.
ScoreSeed cross_entropy_seed(const Vector& logits, std::size_t target);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 0.01;
  double momentum = 0.9;  // plain SGD with heavy-ball momentum
  std::uint64_t seed = 0;
};

struct TrainLog {
  std::vector<double> epoch_loss;      // mean cross-entropy per epoch
  std::vector<double> epoch_accuracy;  // training accuracy seen during the epoch
};

/// Minibatch SGD on softmax cross-entropy. Per-cloud gradients may be
/// computed in parallel; they are always summed in batch order.
ClassifierModel train_classifier(const ClassifierModel& model, const Dataset& data, const TrainConfig& cfg,
                                 TrainLog* log = nullptr);

double accuracy(const ClassifierModel& model, const Dataset& data);

// Checkpoints are JSON: {"format":"pointcvar-model","version":1,"arch":{...},
// "trunk":[{"W":{"rows":r,"cols":c,"data":[column-major]},"b":[...]}...],
// "head":[...]}. Doubles are written in shortest round-trip form so a
// save/load cycle is bit-exact.
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);
std::string model_to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const std::string& text);

template <class F>
void ParamSet::for_each(F&& f) {
  auto visit = [&](std::vector<Dense>& layers) {
    for (auto& d : layers) {
      for (Eigen::Index i = 0; i < d.W.size(); ++i) f(d.W.data()[i]);
      for (Eigen::Index i = 0; i < d.b.size(); ++i) f(d.b.data()[i]);
    }
  };
  visit(trunk);
  visit(head);
}

}  // namespace pcvar
