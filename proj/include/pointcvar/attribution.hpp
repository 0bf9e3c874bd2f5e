#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pointcvar/core.hpp"
#include "pointcvar/model.hpp"

namespace pcvar {

enum class ClassScoreKind { CrossEntropy, MaxLogit, SumLogit };

std::string_view to_string(ClassScoreKind kind);
ClassScoreKind class_score_from_string(std::string_view s);

struct ScoreConfig {
  double lambda = 1.0;  // weight of the geometric score
  ClassScoreKind kind = ClassScoreKind::CrossEntropy;
  std::size_t k_neighbors = 4;
  /// Positive multiplier applied to the whole scoring function. Risks are
  /// invariant to it; it exists so that invariance can be exercised.
  double scale = 1.0;
};

/// Classification score of a trace with its logit gradient.
///  CrossEntropy: softmax cross-entropy against the model's own argmax label.
///  MaxLogit: the largest logit. SumLogit: the sum of logits.
ScoreSeed classification_score(const FeatureTrace& trace, ClassScoreKind kind);

struct GeometricScore {
  double value = 0.0;
  Matrix grad;  // N x 3, d(value)/d(coordinates)
};

/// Population standard deviation of the per-point mean distance to the k
/// nearest neighbours (self excluded). Requires N > k >= 1.
double geometric_score(const PointCloud& cloud, std::size_t k);

/// Value and gradient of the geometric score. Neighbour sets are held fixed
/// while differentiating; a zero score has zero gradient.
GeometricScore geometric_score_with_grad(std::span<const Point3> points, std::size_t k);

struct RiskProfile {
  std::vector<std::vector<double>> per_layer_raw;  // r_i^(l) = |dS/dx_i^(l)|
  std::vector<double> layer_norms;                 // Frobenius norm per layer
  std::vector<double> final;                       // averaged normalised risk
  std::vector<double> weights;                     // empirical probabilities 1/N
  double score = 0.0;                              // value of the scoring function

  std::size_t size() const noexcept { return final.size(); }
};

/// Turns per-layer point gradients into a risk profile: per-point row norms,
/// each layer divided by its Frobenius norm, averaged over all layers. A
/// layer whose gradient is identically zero contributes zeros but still
/// counts in the average.
RiskProfile risks_from_gradients(const std::vector<Matrix>& layer_grads);

/// Per-layer point gradients of S_f = S_c + lambda * S_g. The geometric term
/// only enters the input layer.
std::vector<Matrix> scoring_gradients(const ClassifierModel& model, const PointCloud& cloud, const ScoreConfig& cfg,
                                      double* score_value = nullptr);

RiskProfile point_risks(const ClassifierModel& model, const PointCloud& cloud, const ScoreConfig& cfg);

/// "index,x,y,z,risk[,provenance]" with a header row; the provenance column
/// is present iff the cloud carries provenance.
std::string format_risk_csv(const PointCloud& cloud, const RiskProfile& risks);

}  // namespace pcvar
