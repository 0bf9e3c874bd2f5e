#include "pointcvar/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "pointcvar/io.hpp"
#include "pointcvar/kernels.hpp"

namespace pcvar {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ParamSet

void ParamSet::set_zero() {
  for_each([](double& v) { v = 0.0; });
}

ParamSet& ParamSet::operator+=(const ParamSet& o) {
  add_scaled(o, 1.0);
  return *this;
}

ParamSet& ParamSet::operator*=(double s) {
  for_each([s](double& v) { v *= s; });
  return *this;
}

void ParamSet::add_scaled(const ParamSet& o, double s) {
  auto apply = [s](std::vector<Dense>& dst, const std::vector<Dense>& src) {
    require(dst.size() == src.size(), "ParamSet: layer count mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i].W += s * src[i].W;
      dst[i].b += s * src[i].b;
    }
  };
  apply(trunk, o.trunk);
  apply(head, o.head);
}

std::size_t ParamSet::size() const {
  std::size_t n = 0;
  for (const auto& d : trunk) n += static_cast<std::size_t>(d.W.size() + d.b.size());
  for (const auto& d : head) n += static_cast<std::size_t>(d.W.size() + d.b.size());
  return n;
}

// ---------------------------------------------------------------------------
// Construction

ClassifierModel::ClassifierModel(ModelArch arch, ParamSet params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  require(!arch_.trunk.empty(), "ClassifierModel: empty trunk");
  require(arch_.n_classes >= 2, "ClassifierModel: need at least 2 classes");
  require(params_.trunk.size() == arch_.trunk.size(), "ClassifierModel: trunk parameter count mismatch");
  require(params_.head.size() == arch_.head.size() + 1, "ClassifierModel: head parameter count mismatch");
  std::size_t in = 3;
  for (std::size_t l = 0; l < arch_.trunk.size(); ++l) {
    const auto& d = params_.trunk[l];
    require(static_cast<std::size_t>(d.W.rows()) == in &&
                static_cast<std::size_t>(d.W.cols()) == arch_.trunk[l] &&
                static_cast<std::size_t>(d.b.size()) == arch_.trunk[l],
            "ClassifierModel: trunk layer " + std::to_string(l) + " has wrong shape");
    in = arch_.trunk[l];
  }
  for (std::size_t j = 0; j < params_.head.size(); ++j) {
    const std::size_t out = j < arch_.head.size() ? arch_.head[j] : arch_.n_classes;
    const auto& d = params_.head[j];
    require(static_cast<std::size_t>(d.W.rows()) == in && static_cast<std::size_t>(d.W.cols()) == out &&
                static_cast<std::size_t>(d.b.size()) == out,
            "ClassifierModel: head layer " + std::to_string(j) + " has wrong shape");
    in = out;
  }
}

std::size_t ClassifierModel::point_feature_width(std::size_t l) const {
  require(l < n_point_feature_layers(), "point_feature_width: layer out of range");
  return l == 0 ? 3 : arch_.trunk[l - 1];
}

namespace {

Dense glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Dense d;
  d.W.resize(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index i = 0; i < d.W.size(); ++i) d.W.data()[i] = rng.uniform(-limit, limit);
  d.b = Vector::Zero(static_cast<Eigen::Index>(fan_out));
  return d;
}

}  // namespace

ClassifierModel build_classifier(std::span<const std::size_t> widths, std::size_t n_classes, Rng& rng,
                                 std::span<const std::size_t> head_widths) {
  require(!widths.empty(), "build_classifier: widths must be non-empty");
  require(n_classes >= 2, "build_classifier: n_classes must be >= 2");
  for (auto w : widths) require(w > 0, "build_classifier: zero trunk width");
  for (auto w : head_widths) require(w > 0, "build_classifier: zero head width");
  ModelArch arch{{widths.begin(), widths.end()}, {head_widths.begin(), head_widths.end()}, n_classes};
  ParamSet p;
  std::size_t in = 3;
  for (auto w : widths) {
    p.trunk.push_back(glorot(in, w, rng));
    in = w;
  }
  for (auto w : head_widths) {
    p.head.push_back(glorot(in, w, rng));
    in = w;
  }
  p.head.push_back(glorot(in, n_classes, rng));
  return ClassifierModel(std::move(arch), std::move(p));
}

// ---------------------------------------------------------------------------
// Forward

Matrix to_matrix(const PointCloud& cloud) {
  Matrix m(static_cast<Eigen::Index>(cloud.size()), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, 0) = cloud[i].x;
    m(r, 1) = cloud[i].y;
    m(r, 2) = cloud[i].z;
  }
  return m;
}

namespace {

void check_finite(const Matrix& m, const std::string& where) {
  if (!m.allFinite()) fail(ErrorCode::NonFinite, "non-finite activation at " + where);
}

void check_finite(const Vector& v, const std::string& where) {
  if (!v.allFinite()) fail(ErrorCode::NonFinite, "non-finite activation at " + where);
}

// Runs trunk layers [first, L) on `features`, then pool and head.
void forward_from(const ClassifierModel& model, std::size_t first, const Matrix& features, FeatureTrace& t) {
  const auto& P = model.params();
  const std::size_t L = P.trunk.size();
  require(features.rows() >= 1, "forward: cloud must have at least one point");
  const Matrix* in = &features;
  for (std::size_t l = first; l < L; ++l) {
    const auto& d = P.trunk[l];
    Matrix pre = (*in) * d.W;
    pre.rowwise() += d.b.transpose();
    check_finite(pre, "trunk layer " + std::to_string(l + 1));
    Matrix out = pre.unaryExpr([](double x) { return activation(x); });
    t.trunk_pre[l] = std::move(pre);
    t.trunk_out[l] = std::move(out);
    in = &t.trunk_out[l];
  }
  const Matrix& last = t.trunk_out[L - 1];
  const Eigen::Index channels = last.cols();
  t.pooled.resize(channels);
  t.argmax.assign(static_cast<std::size_t>(channels), 0);
  for (Eigen::Index c = 0; c < channels; ++c) {
    Eigen::Index best = 0;
    double v = last(0, c);
    for (Eigen::Index r = 1; r < last.rows(); ++r) {
      if (last(r, c) > v) {
        v = last(r, c);
        best = r;
      }
    }
    t.pooled(c) = v;
    t.argmax[static_cast<std::size_t>(c)] = best;
  }
  Vector h = t.pooled;
  t.head_in.clear();
  t.head_pre.clear();
  for (std::size_t j = 0; j < P.head.size(); ++j) {
    const auto& d = P.head[j];
    Vector pre = d.W.transpose() * h + d.b;
    check_finite(pre, "head layer " + std::to_string(j + 1));
    t.head_in.push_back(h);
    t.head_pre.push_back(pre);
    const bool last_layer = j + 1 == P.head.size();
    h = last_layer ? pre : Vector(pre.unaryExpr([](double x) { return activation(x); }));
  }
  t.logits = h;
}

}  // namespace

FeatureTrace forward_trace(const ClassifierModel& model, const Matrix& coords) {
  require(coords.cols() == 3, "forward_trace: coordinates must be N x 3");
  const std::size_t L = model.params().trunk.size();
  FeatureTrace t;
  t.input = coords;
  t.trunk_pre.resize(L);
  t.trunk_out.resize(L);
  check_finite(coords, "input");
  forward_from(model, 0, t.input, t);
  return t;
}

FeatureTrace forward_trace(const ClassifierModel& model, const PointCloud& cloud) {
  return forward_trace(model, to_matrix(cloud));
}

Vector logits_from_point_features(const ClassifierModel& model, std::size_t l, const Matrix& features) {
  require(l < model.n_point_feature_layers(), "logits_from_point_features: layer out of range");
  require(static_cast<std::size_t>(features.cols()) == model.point_feature_width(l),
          "logits_from_point_features: feature width mismatch");
  const std::size_t L = model.params().trunk.size();
  FeatureTrace t;
  t.trunk_pre.resize(L);
  t.trunk_out.resize(L);
  forward_from(model, l, features, t);
  return t.logits;
}

// ---------------------------------------------------------------------------
// Backward

namespace {

Matrix gather_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
  return out;
}

// Only rows that win some pooled channel receive gradient, so the trunk
// backward pass runs on that compact row set and scatters at the end.
std::vector<Matrix> backward_impl(const ClassifierModel& model, const FeatureTrace& t, const ScoreSeed& seed,
                                  ParamSet* grads) {
  const auto& P = model.params();
  require(static_cast<std::size_t>(seed.dlogits.size()) == model.n_classes(),
          "backward: seed gradient length must equal the class count");
  const std::size_t L = P.trunk.size();
  const Eigen::Index n = t.input.rows();

  if (grads) {
    grads->trunk.resize(L);
    grads->head.resize(P.head.size());
  }

  Vector dh = seed.dlogits;
  for (std::size_t jj = P.head.size(); jj-- > 0;) {
    const bool last_layer = jj + 1 == P.head.size();
    Vector dpre = last_layer ? dh
                             : Vector(dh.cwiseProduct(
                                   t.head_pre[jj].unaryExpr([](double x) { return activation_grad(x); })));
    if (grads) {
      grads->head[jj].W = t.head_in[jj] * dpre.transpose();
      grads->head[jj].b = dpre;
    }
    dh = P.head[jj].W * dpre;
  }

  std::vector<Eigen::Index> rows(t.argmax.begin(), t.argmax.end());
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  auto compact = [&](Eigen::Index r) {
    return static_cast<Eigen::Index>(std::lower_bound(rows.begin(), rows.end(), r) - rows.begin());
  };

  const Matrix& last_pre = t.trunk_pre[L - 1];
  Matrix dpre = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), last_pre.cols());
  for (std::size_t c = 0; c < t.argmax.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    const Eigen::Index r = t.argmax[c];
    dpre(compact(r), ci) = dh(ci) * activation_grad(last_pre(r, ci));
  }

  std::vector<Matrix> point_grads(L);
  for (std::size_t l = L; l-- > 0;) {
    const Matrix in_c = gather_rows(t.point_feature(l), rows);
    const auto& d = P.trunk[l];
    if (grads) {
      grads->trunk[l].W = in_c.transpose() * dpre;
      grads->trunk[l].b = dpre.colwise().sum().transpose();
    }
    const Matrix dF = dpre * d.W.transpose();
    if (!dF.allFinite()) fail(ErrorCode::NonFinite, "non-finite gradient at point-feature layer " + std::to_string(l));
    Matrix full = Matrix::Zero(n, dF.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) full.row(rows[k]) = dF.row(static_cast<Eigen::Index>(k));
    point_grads[l] = std::move(full);
    if (l > 0) {
      const Matrix pre_c = gather_rows(t.trunk_pre[l - 1], rows);
      dpre = dF.cwiseProduct(pre_c.unaryExpr([](double x) { return activation_grad(x); }));
    }
  }
  return point_grads;
}

}  // namespace

std::vector<Matrix> backward_point_gradients(const ClassifierModel& model, const FeatureTrace& trace,
                                             const ScoreSeed& seed) {
  return backward_impl(model, trace, seed, nullptr);
}

ParamSet backward_param_gradients(const ClassifierModel& model, const FeatureTrace& trace, const ScoreSeed& seed,
                                  std::vector<Matrix>* point_grads) {
  ParamSet g;
  auto pg = backward_impl(model, trace, seed, &g);
  if (point_grads) *point_grads = std::move(pg);
  return g;
}

// ---------------------------------------------------------------------------
// Prediction and loss

std::size_t argmax_lowest(std::span<const double> values) {
  require(!values.empty(), "argmax_lowest: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t argmax_lowest(const Vector& values) {
  return argmax_lowest(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

std::size_t predict_label(const ClassifierModel& model, const PointCloud& cloud) {
  return argmax_lowest(forward_trace(model, cloud).logits);
}

ScoreSeed cross_entropy_seed(const Vector& logits, std::size_t target) {
  require(target < static_cast<std::size_t>(logits.size()), "cross_entropy: target out of range");
  const double m = logits.maxCoeff();
  const Vector e = (logits.array() - m).exp().matrix();
  const double z = e.sum();
  ScoreSeed s;
  s.value = std::log(z) + m - logits(static_cast<Eigen::Index>(target));
  s.dlogits = e / z;
  s.dlogits(static_cast<Eigen::Index>(target)) -= 1.0;
  return s;
}

// ---------------------------------------------------------------------------
// Training

ClassifierModel train_classifier(const ClassifierModel& model, const Dataset& data, const TrainConfig& cfg,
                                 TrainLog* log) {
  require(!data.clouds.empty(), "train_classifier: empty dataset");
  require(data.split == Split::Train, "train_classifier: dataset must be a train split");
  require(cfg.epochs >= 1, "train_classifier: epochs must be >= 1");
  require(cfg.batch_size >= 1, "train_classifier: batch size must be >= 1");
  require(cfg.learning_rate >= 0.0, "train_classifier: learning rate must be non-negative");
  data.validate();
  for (const auto& c : data.clouds) {
    require(static_cast<std::size_t>(*c.label()) < model.n_classes(), "train_classifier: label exceeds class count");
  }

  ClassifierModel out = model;
  ParamSet velocity = out.params();
  velocity.set_zero();
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<ParamSet> slot_grads(cfg.batch_size);
  std::vector<double> slot_loss(cfg.batch_size);
  std::vector<int> slot_hit(cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the documented stream.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t m = std::min(cfg.batch_size, order.size() - start);
      kernels::parallel_for(m, [&](std::size_t su) {
        const PointCloud& cloud = data.clouds[order[start + su]];
        const auto trace = forward_trace(out, cloud);
        const auto target = static_cast<std::size_t>(*cloud.label());
        const auto seed = cross_entropy_seed(trace.logits, target);
        slot_grads[su] = backward_param_gradients(out, trace, seed);
        slot_loss[su] = seed.value;
        slot_hit[su] = argmax_lowest(trace.logits) == target ? 1 : 0;
      });
      ParamSet g = slot_grads[0];
      for (std::size_t s = 1; s < m; ++s) g += slot_grads[s];
      g *= 1.0 / static_cast<double>(m);
      for (std::size_t s = 0; s < m; ++s) {
        loss_sum += slot_loss[s];
        hits += static_cast<std::size_t>(slot_hit[s]);
      }
      velocity *= cfg.momentum;
      velocity += g;
      out.mutable_params().add_scaled(velocity, -cfg.learning_rate);
    }
    if (log) {
      log->epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
      log->epoch_accuracy.push_back(static_cast<double>(hits) / static_cast<double>(data.size()));
    }
  }
  return out;
}

double accuracy(const ClassifierModel& model, const Dataset& data) {
  if (data.clouds.empty()) return 0.0;
  std::vector<int> hit(data.size(), 0);
  kernels::parallel_for(data.size(), [&](std::size_t i) {
    const auto& c = data.clouds[i];
    hit[i] = c.label() && predict_label(model, c) == static_cast<std::size_t>(*c.label()) ? 1 : 0;
  });
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

json dense_to_json(const Dense& d) {
  std::vector<double> w(d.W.data(), d.W.data() + d.W.size());
  std::vector<double> b(d.b.data(), d.b.data() + d.b.size());
  return {{"W", {{"rows", d.W.rows()}, {"cols", d.W.cols()}, {"data", w}}}, {"b", b}};
}

Dense dense_from_json(const json& j) {
  Dense d;
  const auto rows = j.at("W").at("rows").get<Eigen::Index>();
  const auto cols = j.at("W").at("cols").get<Eigen::Index>();
  const auto w = j.at("W").at("data").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(w.size()) == rows * cols, "checkpoint: weight size mismatch");
  d.W = Eigen::Map<const Matrix>(w.data(), rows, cols);
  const auto b = j.at("b").get<std::vector<double>>();
  d.b = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
  return d;
}

}  // namespace

std::string model_to_json(const ClassifierModel& model) {
  json j;
  j["format"] = "pointcvar-model";
  j["version"] = 1;
  j["arch"] = {{"trunk", model.arch().trunk}, {"head", model.arch().head}, {"n_classes", model.arch().n_classes}};
  j["trunk"] = json::array();
  for (const auto& d : model.params().trunk) j["trunk"].push_back(dense_to_json(d));
  j["head"] = json::array();
  for (const auto& d : model.params().head) j["head"].push_back(dense_to_json(d));
  return j.dump();
}

ClassifierModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "pointcvar-model") fail(ErrorCode::Parse, "not a pointcvar model");
    if (j.at("version").get<int>() != 1) fail(ErrorCode::Parse, "unsupported model version");
    ModelArch arch;
    arch.trunk = j.at("arch").at("trunk").get<std::vector<std::size_t>>();
    arch.head = j.at("arch").at("head").get<std::vector<std::size_t>>();
    arch.n_classes = j.at("arch").at("n_classes").get<std::size_t>();
    ParamSet p;
    for (const auto& d : j.at("trunk")) p.trunk.push_back(dense_from_json(d));
    for (const auto& d : j.at("head")) p.head.push_back(dense_from_json(d));
    return ClassifierModel(std::move(arch), std::move(p));
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("model checkpoint: ") + e.what());
  }
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model) + "\n");
}

ClassifierModel load_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

}  // namespace pcvar
