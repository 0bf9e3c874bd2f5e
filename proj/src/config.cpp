#include "pointcvar/config.hpp"

#include <cmath>
#include <json.hpp>
#include <set>

#include "pointcvar/error.hpp"
#include "pointcvar/io.hpp"
#include "pointcvar/rng.hpp"

namespace pcvar {

using nlohmann::json;

namespace {

// Reads typed keys from one JSON object and reports any key never read.
class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (name_.empty()) {
      obj_ = &root;
    } else if (root.contains(name_)) {
      obj_ = &root.at(name_);
    }
    if (obj_ && !obj_->is_object()) fail(ErrorCode::Config, "config: section '" + name_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key)) return;
    try {
      out = obj_->at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorCode::Config, "config: bad value for '" + path(key) + "': " + e.what());
    }
  }

  template <class T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key) || obj_->at(key).is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  void mark(const char* key) { seen_.insert(key); }

  void finish() const {
    if (!obj_) return;
    for (const auto& [k, _] : obj_->items()) {
      if (!seen_.count(k)) fail(ErrorCode::Config, "config: unknown key '" + path(k) + "'");
    }
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

void read_shapes(Section& s, ShapeDatasetOptions& o) {
  s.get("n_per_class", o.n_per_class);
  s.get("n_points", o.n_points);
  s.get("scale_jitter", o.scale_jitter);
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorCode::Config, "config override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorCode::Config, "config override '" + assignment + "' has an empty key segment");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (!node->is_object()) {
      if (!node->is_null()) fail(ErrorCode::Config, "config override '" + assignment + "' descends into a value");
      *node = json::object();
    }
    start = dot + 1;
  }
}

}  // namespace

void AppConfig::finalize() {
  removal.score = score;
  if (noise_fraction) {
    require(*noise_fraction >= 0.0 && *noise_fraction <= 1.0, "config: noise.fraction must lie in [0, 1]");
    noise.count = static_cast<std::size_t>(std::floor(*noise_fraction * static_cast<double>(test_data.n_points) + 1e-9));
  }
  if (noise.mode == NoiseMode::Trigger && !noise.target_label) noise.target_label = poison_target;
  if (removal.method == RemovalMethod::Multistep && removal.steps < 2) {
    fail(ErrorCode::Config, "config: multistep removal needs removal.steps >= 2");
  }
  try {
    noise.validate();
    removal.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("config: ") + e.what());
  }
  require(!trunk.empty() && !head.empty(), "config: model.trunk and model.head must be non-empty");
  require(train.epochs >= 1 && train.batch_size >= 1, "config: train.epochs and train.batch_size must be >= 1");
  require(tail_alpha >= 0.0 && tail_alpha < 1.0, "config: tail.alpha must lie in [0, 1)");
  require(poison_rate > 0.0 && poison_rate < 1.0, "config: poison.rate must lie in (0, 1)");
  require(poison_target >= 0, "config: poison.target_label must be >= 0");
  require(!sweep_deltas.empty(), "config: sweep.deltas must be non-empty");
}

AppConfig parse_config(const std::string& text, std::span<const std::string> overrides) {
  json root = text.empty() ? json::object() : json::parse(text, nullptr, false);
  if (root.is_discarded()) fail(ErrorCode::Config, "config: not valid JSON");
  if (!root.is_object()) fail(ErrorCode::Config, "config: top level must be an object");
  for (const auto& o : overrides) apply_override(root, o);

  AppConfig c;
  Section top(root, "");
  top.get("seed", c.seed);
  for (const char* name : {"data", "model", "train", "score", "noise", "removal", "poison", "tail", "sweep"}) {
    top.mark(name);
  }
  top.finish();

  Section data(root, "data");
  if (root.contains("data")) {
    Section train_data(root["data"], "train");
    read_shapes(train_data, c.train_data);
    train_data.finish();
    Section test_data(root["data"], "test");
    read_shapes(test_data, c.test_data);
    test_data.finish();
  }
  data.mark("train");
  data.mark("test");
  data.finish();

  Section model(root, "model");
  model.get("trunk", c.trunk);
  model.get("head", c.head);
  model.finish();

  Section train(root, "train");
  train.get("epochs", c.train.epochs);
  train.get("batch_size", c.train.batch_size);
  train.get("learning_rate", c.train.learning_rate);
  train.get("momentum", c.train.momentum);
  c.train.seed = c.seed;
  train.get("seed", c.train.seed);
  train.finish();

  Section score(root, "score");
  score.get("lambda", c.score.lambda);
  std::string kind(to_string(c.score.kind));
  score.get("kind", kind);
  c.score.kind = class_score_from_string(kind);
  score.get("k_neighbors", c.score.k_neighbors);
  score.finish();

  Section noise(root, "noise");
  std::string mode(to_string(c.noise.mode));
  noise.get("mode", mode);
  c.noise.mode = noise_mode_from_string(mode);
  noise.get("count", c.noise.count);
  noise.get_optional("fraction", c.noise_fraction);
  noise.get_optional("region", c.noise.region);
  noise.get("n_clusters", c.noise.n_clusters);
  std::vector<double> centre{c.noise.trigger_center.x, c.noise.trigger_center.y, c.noise.trigger_center.z};
  noise.get("trigger_center", centre);
  require(centre.size() == 3, "config: noise.trigger_center needs three numbers");
  c.noise.trigger_center = {centre[0], centre[1], centre[2]};
  noise.get("trigger_radius", c.noise.trigger_radius);
  noise.get_optional("target_label", c.noise.target_label);
  noise.get("adv_step", c.noise.adv_step);
  noise.get("adv_iters", c.noise.adv_iters);
  c.noise.seed = c.seed + 1;
  noise.get("seed", c.noise.seed);
  if (c.noise.mode == NoiseMode::Trigger && !(root.contains("noise") && root["noise"].contains("count"))) {
    c.noise.count = kDefaultTriggerPoints;
  }
  noise.finish();

  Section removal(root, "removal");
  std::string method(to_string(c.removal.method));
  removal.get("method", method);
  c.removal.method = removal_method_from_string(method);
  removal.get("delta", c.removal.delta);
  removal.get("steps", c.removal.steps);
  removal.get("alpha", c.removal.alpha);
  removal.get("sor_k", c.removal.sor_k);
  removal.get("sor_std_mult", c.removal.sor_std_mult);
  removal.get("ror_radius", c.removal.ror_radius);
  removal.get("ror_min_neighbors", c.removal.ror_min_neighbors);
  c.removal.rs_seed = c.seed + 2;
  removal.get("rs_seed", c.removal.rs_seed);
  removal.finish();

  Section poison(root, "poison");
  poison.get("rate", c.poison_rate);
  poison.get("target_label", c.poison_target);
  poison.finish();

  Section tail(root, "tail");
  tail.get("alpha", c.tail_alpha);
  tail.finish();

  Section sweep(root, "sweep");
  sweep.get("deltas", c.sweep_deltas);
  sweep.finish();

  c.finalize();
  return c;
}

AppConfig load_config(const std::optional<std::filesystem::path>& path, std::span<const std::string> overrides) {
  return parse_config(path ? read_text_file(*path) : std::string(), overrides);
}

std::string config_to_json(const AppConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  auto shapes = [](const ShapeDatasetOptions& o) {
    return nlohmann::ordered_json{{"n_per_class", o.n_per_class}, {"n_points", o.n_points},
                                  {"scale_jitter", o.scale_jitter}};
  };
  j["data"]["train"] = shapes(c.train_data);
  j["data"]["test"] = shapes(c.test_data);
  j["model"] = {{"trunk", c.trunk}, {"head", c.head}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"momentum", c.train.momentum},
                {"seed", c.train.seed}};
  j["score"] = {{"lambda", c.score.lambda},
                {"kind", std::string(to_string(c.score.kind))},
                {"k_neighbors", c.score.k_neighbors}};
  auto& n = j["noise"];
  n["mode"] = std::string(to_string(c.noise.mode));
  n["count"] = c.noise.count;
  n["fraction"] = c.noise_fraction ? nlohmann::ordered_json(*c.noise_fraction) : nullptr;
  n["region"] = c.noise.region ? nlohmann::ordered_json(*c.noise.region) : nullptr;
  n["n_clusters"] = c.noise.n_clusters;
  n["trigger_center"] = {c.noise.trigger_center.x, c.noise.trigger_center.y, c.noise.trigger_center.z};
  n["trigger_radius"] = c.noise.trigger_radius;
  n["target_label"] = c.noise.target_label ? nlohmann::ordered_json(*c.noise.target_label) : nullptr;
  n["adv_step"] = c.noise.adv_step;
  n["adv_iters"] = c.noise.adv_iters;
  n["seed"] = c.noise.seed;
  j["removal"] = {{"method", std::string(to_string(c.removal.method))},
                  {"delta", c.removal.delta},
                  {"steps", c.removal.steps},
                  {"alpha", c.removal.alpha},
                  {"sor_k", c.removal.sor_k},
                  {"sor_std_mult", c.removal.sor_std_mult},
                  {"ror_radius", c.removal.ror_radius},
                  {"ror_min_neighbors", c.removal.ror_min_neighbors},
                  {"rs_seed", c.removal.rs_seed}};
  j["poison"] = {{"rate", c.poison_rate}, {"target_label", c.poison_target}};
  j["tail"] = {{"alpha", c.tail_alpha}};
  j["sweep"] = {{"deltas", c.sweep_deltas}};
  return j.dump(2);
}

NoiseSpec trigger_spec(const AppConfig& cfg) {
  if (cfg.noise.mode == NoiseMode::Trigger) return cfg.noise;
  NoiseSpec spec = cfg.noise;
  spec.mode = NoiseMode::Trigger;
  spec.count = kDefaultTriggerPoints;
  spec.target_label = cfg.poison_target;
  return spec;
}

Dataset poison_from_config(const AppConfig& cfg, const Dataset& train) {
  Rng rng(cfg.seed + 3);
  return poison_dataset(train, trigger_spec(cfg), cfg.poison_rate, cfg.poison_target, rng);
}

DatasetPair make_datasets(const AppConfig& cfg) {
  Rng rng(cfg.seed);
  DatasetPair out;
  out.train = make_shape_dataset(cfg.train_data, Split::Train, rng);
  out.test = make_shape_dataset(cfg.test_data, Split::Test, rng);
  return out;
}

ClassifierModel train_from_config(const AppConfig& cfg, const Dataset& train, TrainLog* log) {
  train.validate();
  Rng init(cfg.train.seed);
  const auto model = build_classifier(cfg.trunk, train.n_classes(), init, cfg.head);
  return train_classifier(model, train, cfg.train, log);
}

}  // namespace pcvar
