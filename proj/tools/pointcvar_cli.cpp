// Command-line front end. Every verb reads the same config file (--config)
// plus dotted overrides (--set key=value) and prints one JSON line on
// success. Failures print {"error": code, "message": ...} to stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pointcvar/config.hpp"
#include "pointcvar/error.hpp"
#include "pointcvar/eval.hpp"
#include "pointcvar/io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace pcvar;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;

  AppConfig load() const {
    return load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path), overrides);
  }
};

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", common.overrides, "override, e.g. removal.delta=0.92 (repeatable)");
}

void emit(const ordered_json& j) { std::cout << j.dump() << std::endl; }

void print_error(const std::string& code, const std::string& message) {
  std::cerr << ordered_json{{"error", code}, {"message", message}}.dump() << std::endl;
}

Split split_arg(const std::string& s) { return split_from_string(s); }

void write_dataset(const Dataset& data, const fs::path& dir, const std::string& prefix,
                   std::vector<ManifestEntry>& manifest) {
  save_dataset_clouds(data, dir, prefix, manifest);
}

ordered_json train_summary(const TrainLog& log, const fs::path& out, double acc) {
  return {{"model", out.string()},
          {"epochs", log.epoch_loss.size()},
          {"final_loss", log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back()},
          {"train_accuracy", acc}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tail-risk point cloud outlier removal"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string out, data, model_path, in, csv_path, split = "test";

  auto* show = app.add_subcommand("config", "print the resolved config as JSON");
  add_common(show, common);

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic train and test splits");
  add_common(gen, common);
  gen->add_option("--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a classifier on the train split");
  add_common(train, common);
  train->add_option("--data", data, "manifest")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "model checkpoint to write")->required();

  auto* poison = app.add_subcommand("poison-train", "train on a poison-label corrupted train split");
  add_common(poison, common);
  poison->add_option("--data", data, "manifest")->required()->check(CLI::ExistingFile);
  poison->add_option("--out", out, "model checkpoint to write")->required();

  auto* corrupt = app.add_subcommand("corrupt", "write a corrupted copy of one split");
  add_common(corrupt, common);
  corrupt->add_option("--data", data, "manifest")->required()->check(CLI::ExistingFile);
  corrupt->add_option("--split", split, "train or test");
  corrupt->add_option("--model", model_path, "checkpoint (advadd noise only)")->check(CLI::ExistingFile);
  corrupt->add_option("--out", out, "output directory")->required();

  auto* remove = app.add_subcommand("remove", "apply the configured removal to one cloud");
  add_common(remove, common);
  remove->add_option("--in", in, "cloud CSV")->required()->check(CLI::ExistingFile);
  remove->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  remove->add_option("--out", out, "cloud CSV to write")->required();

  auto* evaluate = app.add_subcommand("evaluate", "removal-and-classification on the test split");
  add_common(evaluate, common);
  evaluate->add_option("--data", data, "manifest")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", out, "directory for report.json");

  auto* sweep = app.add_subcommand("sweep", "accuracy versus retention rate for vanilla and multistep");
  add_common(sweep, common);
  sweep->add_option("--data", data, "manifest")->required()->check(CLI::ExistingFile);
  sweep->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "CSV to write")->required();

  auto* tail = app.add_subcommand("tail-test", "paired Wilcoxon test of clean versus corrupted CVaR");
  add_common(tail, common);
  tail->add_option("--data", data, "manifest")->required()->check(CLI::ExistingFile);
  tail->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  tail->add_option("--csv", csv_path, "per-cloud CVaR CSV to write");

  auto* risk = app.add_subcommand("export-risk", "per-point risks of one cloud as CSV");
  add_common(risk, common);
  risk->add_option("--in", in, "cloud CSV")->required()->check(CLI::ExistingFile);
  risk->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  risk->add_option("--out", out, "CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitUsage;
  }

  try {
    const AppConfig cfg = common.load();

    if (show->parsed()) {
      std::cout << config_to_json(cfg) << std::endl;
    } else if (gen->parsed()) {
      const auto sets = make_datasets(cfg);
      std::vector<ManifestEntry> manifest;
      write_dataset(sets.train, out, "train/cloud_", manifest);
      write_dataset(sets.test, out, "test/cloud_", manifest);
      save_manifest(manifest, fs::path(out) / "manifest.jsonl");
      save_class_names(sets.train.class_names, out);
      emit({{"manifest", (fs::path(out) / "manifest.jsonl").string()},
            {"train", sets.train.size()},
            {"test", sets.test.size()}});
    } else if (train->parsed() || poison->parsed()) {
      Dataset set = load_dataset(data, Split::Train);
      if (poison->parsed()) set = poison_from_config(cfg, set);
      TrainLog log;
      const auto model = train_from_config(cfg, set, &log);
      save_model(model, out);
      auto j = train_summary(log, out, accuracy(model, set));
      if (poison->parsed()) {
        // Attack success on the held-out split, before any defence.
        const auto test = load_dataset(data, Split::Test);
        RemovalConfig none = cfg.removal;
        none.method = RemovalMethod::Vanilla;
        none.delta = 1.0;
        const auto rep = evaluate_protocol(model, test, trigger_spec(cfg), none, {false});
        j["acc_clean"] = rep.acc_clean;
        j["asr"] = rep.asr_raw ? ordered_json(*rep.asr_raw) : nullptr;
      }
      emit(j);
    } else if (corrupt->parsed()) {
      const Split which = split_arg(split);
      const auto set = load_dataset(data, which);
      std::optional<ClassifierModel> model;
      if (!model_path.empty()) model = load_model(model_path);
      require(cfg.noise.mode != NoiseMode::AdvAdd || model, "corrupt: advadd noise needs --model");
      const auto noisy = corrupt_dataset(set, cfg.noise, model ? &*model : nullptr);
      std::vector<ManifestEntry> manifest;
      write_dataset(noisy, out, std::string(to_string(which)) + "/cloud_", manifest);
      save_manifest(manifest, fs::path(out) / "manifest.jsonl");
      save_class_names(set.class_names, out);
      emit({{"manifest", (fs::path(out) / "manifest.jsonl").string()}, {"clouds", noisy.size()}});
    } else if (remove->parsed()) {
      const auto model = load_model(model_path);
      const auto cloud = load_cloud(in);
      const auto res = apply_removal(cloud, cfg.removal, model);
      save_cloud(res.cloud, out);
      emit({{"n_in", cloud.size()},
            {"n_out", res.cloud.size()},
            {"steps_run", res.steps_run},
            {"stopped_early", res.stopped_early},
            {"warning", res.warning}});
    } else if (evaluate->parsed()) {
      RunConfig run;
      run.test_manifest = data;
      run.model_path = model_path;
      run.noise = cfg.noise;
      run.removal = cfg.removal;
      run.seed = cfg.seed;
      run.output_dir = out;
      const auto rep = run_removal_and_classification(run);
      std::cout << report_to_json(rep, cfg.noise, cfg.removal) << std::endl;
    } else if (sweep->parsed()) {
      const auto model = load_model(model_path);
      const auto test = load_dataset(data, Split::Test);
      const auto rows = sweep_retention(model, test, cfg.noise, cfg.removal, cfg.sweep_deltas);
      write_text_file(out, format_sweep_csv(rows));
      emit({{"csv", out}, {"rows", rows.size()}});
    } else if (tail->parsed()) {
      const auto model = load_model(model_path);
      const auto test = load_dataset(data, Split::Test);
      const auto res = run_hypothesis_test(model, test, cfg.noise, cfg.tail_alpha, cfg.score,
                                           csv_path.empty() ? std::nullopt : std::optional<fs::path>(csv_path));
      emit({{"n_pairs", res.test.n_pairs},
            {"statistic", res.test.statistic},
            {"p_value", res.test.p_value},
            {"exact", res.test.exact},
            {"alpha", cfg.tail_alpha}});
    } else if (risk->parsed()) {
      const auto model = load_model(model_path);
      export_risk_csv(model, load_cloud(in), cfg.score, out);
      emit({{"csv", out}});
    }
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitFailure;
  }
  return 0;
}
