#include "pointcvar/eval.hpp"

#include <chrono>
#include <cstdio>

#include <json.hpp>
#include "pointcvar/error.hpp"
#include "pointcvar/io.hpp"
#include "pointcvar/kernels.hpp"

namespace pcvar {

double CloudOutcome::outlier_recall() const {
  if (n_outlier == 0) return 1.0;
  return static_cast<double>(n_outlier - kept_outlier) / static_cast<double>(n_outlier);
}

double CloudOutcome::clean_retention() const {
  if (n_clean == 0) return 1.0;
  return static_cast<double>(kept_clean) / static_cast<double>(n_clean);
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::size_t i) { return seed ^ (0xD1B54A32D192ED03ULL * (i + 1)); }

}  // namespace

EvalReport evaluate_protocol(const ClassifierModel& model, const Dataset& test, const NoiseSpec& noise,
                             const RemovalConfig& removal, const ProtocolOptions& opts) {
  test.validate();
  noise.validate();
  removal.validate();
  require(test.size() >= 1, "evaluate: empty test set");
  require(test.n_classes() == model.n_classes(), "evaluate: model and dataset disagree on the class count");
  if (noise.mode == NoiseMode::Trigger) {
    require(noise.target_label.has_value(), "evaluate: trigger noise needs target_label");
  }

  EvalReport rep;
  rep.n_clouds = test.size();
  rep.clouds.resize(test.size());
  std::vector<PointCloud> corrupted(test.size());
  kernels::parallel_for(test.size(), [&](std::size_t i) {
    const PointCloud& clean = test.clouds[i];
    Rng rng(mix(noise.seed, i));
    corrupted[i] = corrupt_cloud(clean, noise, rng, &model);
    RemovalConfig cfg = removal;
    cfg.rs_seed = mix(removal.rs_seed, i);

    CloudOutcome& o = rep.clouds[i];
    o.label = *clean.label();
    o.n_clean = corrupted[i].count(Provenance::Clean);
    o.n_outlier = corrupted[i].count(Provenance::Outlier);
    o.pred_clean = predict_label(model, clean);
    o.pred_noisy = predict_label(model, corrupted[i]);

    const auto t0 = std::chrono::steady_clock::now();
    const auto res = apply_removal(corrupted[i], cfg, model);
    o.removal_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.kept_clean = res.cloud.count(Provenance::Clean);
    o.kept_outlier = res.cloud.count(Provenance::Outlier);
    o.pred_removed = predict_label(model, res.cloud);
    if (opts.clean_removal) o.pred_clean_removed = predict_label(model, apply_removal(clean, cfg, model).cloud);
  });

  const double n = static_cast<double>(test.size());
  std::size_t hit_clean = 0, hit_noisy = 0, hit_removed = 0, hit_clean_removed = 0;
  std::size_t with_outliers = 0;
  std::size_t asr_total = 0, asr_raw = 0, asr_removed = 0;
  double recall_sum = 0.0, retention_sum = 0.0, seconds = 0.0;
  for (const auto& o : rep.clouds) {
    const auto label = static_cast<std::size_t>(o.label);
    hit_clean += o.pred_clean == label;
    hit_noisy += o.pred_noisy == label;
    hit_removed += o.pred_removed == label;
    if (o.pred_clean_removed) hit_clean_removed += *o.pred_clean_removed == label;
    if (o.n_outlier > 0) {
      ++with_outliers;
      recall_sum += o.outlier_recall();
    }
    retention_sum += o.clean_retention();
    seconds += o.removal_seconds;
    if (noise.mode == NoiseMode::Trigger && o.label != *noise.target_label) {
      const auto target = static_cast<std::size_t>(*noise.target_label);
      ++asr_total;
      asr_raw += o.pred_noisy == target;
      asr_removed += o.pred_removed == target;
    }
  }
  rep.acc_clean = static_cast<double>(hit_clean) / n;
  rep.acc_noisy_raw = static_cast<double>(hit_noisy) / n;
  rep.acc_noisy_removed = static_cast<double>(hit_removed) / n;
  if (opts.clean_removal) rep.acc_clean_removed = static_cast<double>(hit_clean_removed) / n;
  rep.outlier_recall = with_outliers ? recall_sum / static_cast<double>(with_outliers) : 1.0;
  rep.clean_retention = retention_sum / n;
  rep.seconds_per_cloud = seconds / n;
  if (asr_total > 0) {
    rep.asr_raw = static_cast<double>(asr_raw) / static_cast<double>(asr_total);
    rep.asr_removed = static_cast<double>(asr_removed) / static_cast<double>(asr_total);
  }
  return rep;
}

void RunConfig::validate() const {
  noise.validate();
  removal.validate();
  if (!std::filesystem::exists(test_manifest)) {
    fail(ErrorCode::Config, "test manifest not found: " + test_manifest.string());
  }
  if (!std::filesystem::exists(model_path)) fail(ErrorCode::Config, "model not found: " + model_path.string());
  if (noise.mode == NoiseMode::Trigger && !noise.target_label) {
    fail(ErrorCode::Config, "noise.target_label is required for trigger noise");
  }
}

EvalReport run_removal_and_classification(const RunConfig& cfg) {
  cfg.validate();
  const auto model = load_model(cfg.model_path);
  const auto test = load_dataset(cfg.test_manifest, Split::Test);
  auto rep = evaluate_protocol(model, test, cfg.noise, cfg.removal);
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    write_text_file(cfg.output_dir / "report.json", report_to_json(rep, cfg.noise, cfg.removal) + "\n");
  }
  return rep;
}

std::string report_to_json(const EvalReport& r, const NoiseSpec& noise, const RemovalConfig& removal) {
  nlohmann::ordered_json j;
  j["n_clouds"] = r.n_clouds;
  j["noise"] = std::string(to_string(noise.mode));
  j["noise_count"] = noise.count;
  j["method"] = std::string(to_string(removal.method));
  j["delta"] = removal.delta;
  j["steps"] = removal.steps;
  j["lambda"] = removal.score.lambda;
  j["acc_clean"] = r.acc_clean;
  j["acc_noisy_raw"] = r.acc_noisy_raw;
  j["acc_noisy_removed"] = r.acc_noisy_removed;
  j["acc_clean_removed"] = r.acc_clean_removed ? nlohmann::ordered_json(*r.acc_clean_removed) : nullptr;
  j["outlier_recall"] = r.outlier_recall;
  j["clean_retention"] = r.clean_retention;
  j["asr_raw"] = r.asr_raw ? nlohmann::ordered_json(*r.asr_raw) : nullptr;
  j["asr_removed"] = r.asr_removed ? nlohmann::ordered_json(*r.asr_removed) : nullptr;
  j["seconds_per_cloud"] = r.seconds_per_cloud;
  return j.dump();
}

TailTestResult run_hypothesis_test(const ClassifierModel& model, const Dataset& clean_set, const NoiseSpec& spec,
                                   double alpha, const ScoreConfig& score,
                                   const std::optional<std::filesystem::path>& csv_path) {
  require(clean_set.size() >= 20, "tail test: need at least 20 clouds, got " + std::to_string(clean_set.size()));
  require(alpha >= 0.0 && alpha < 1.0, "tail test: alpha must lie in [0, 1)");
  spec.validate();
  TailTestResult out;
  out.cvar_clean.resize(clean_set.size());
  out.cvar_noisy.resize(clean_set.size());
  kernels::parallel_for(clean_set.size(), [&](std::size_t i) {
    const PointCloud& clean = clean_set.clouds[i];
    Rng rng(mix(spec.seed, i));
    const PointCloud noisy = corrupt_cloud(clean, spec, rng, &model);
    out.cvar_clean[i] = cvar_discrete(RiskSample::uniform(point_risks(model, clean, score).final), alpha);
    out.cvar_noisy[i] = cvar_discrete(RiskSample::uniform(point_risks(model, noisy, score).final), alpha);
  });
  if (csv_path) {
    char buf[128];
    std::string csv = "cloud_id,condition,cvar\n";
    for (std::size_t i = 0; i < clean_set.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,clean,%.17g\n%zu,noisy,%.17g\n", i, out.cvar_clean[i], i,
                    out.cvar_noisy[i]);
      csv += buf;
    }
    write_text_file(*csv_path, csv);
  }
  std::vector<double> diffs(clean_set.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) diffs[i] = out.cvar_noisy[i] - out.cvar_clean[i];
  out.test = wilcoxon_signed_rank(diffs, Alternative::Greater);
  return out;
}

std::vector<SweepRow> sweep_retention(const ClassifierModel& model, const Dataset& test, const NoiseSpec& noise,
                                      const RemovalConfig& base, std::span<const double> deltas) {
  require(!deltas.empty(), "sweep: no retention rates given");
  std::vector<SweepRow> rows;
  for (RemovalMethod method : {RemovalMethod::Vanilla, RemovalMethod::Multistep}) {
    for (double delta : deltas) {
      RemovalConfig cfg = base;
      cfg.method = method;
      cfg.delta = delta;
      if (method == RemovalMethod::Multistep && cfg.steps < 2) cfg.steps = 2;
      rows.push_back({method, delta, evaluate_protocol(model, test, noise, cfg)});
    }
  }
  return rows;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string csv =
      "method,delta,acc_clean,acc_clean_removed,acc_noisy_raw,acc_noisy_removed,outlier_recall,clean_retention,"
      "seconds_per_cloud\n";
  char buf[320];
  for (const auto& row : rows) {
    const auto& r = row.report;
    std::snprintf(buf, sizeof buf, "%s,%.15g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6g\n",
                  std::string(to_string(row.method)).c_str(), row.delta, r.acc_clean,
                  r.acc_clean_removed.value_or(r.acc_clean), r.acc_noisy_raw, r.acc_noisy_removed, r.outlier_recall,
                  r.clean_retention, r.seconds_per_cloud);
    csv += buf;
  }
  return csv;
}

void export_risk_csv(const ClassifierModel& model, const PointCloud& cloud, const ScoreConfig& cfg,
                     const std::filesystem::path& path) {
  write_text_file(path, format_risk_csv(cloud, point_risks(model, cloud, cfg)));
}

}  // namespace pcvar
