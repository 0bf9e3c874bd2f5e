#pragma once

// Desk-scale trained models shared by the empirical unit tests. Training
// takes about a minute, so checkpoints are cached in the build tree, keyed
// by the resolved config text.

#include <filesystem>
#include <functional>
#include <string>

#include "pointcvar/config.hpp"
#include "pointcvar/io.hpp"

#ifndef PCVAR_TEST_CACHE
#define PCVAR_TEST_CACHE "."
#endif

namespace fixture {

struct Desk {
  pcvar::AppConfig cfg;
  pcvar::DatasetPair data;
  pcvar::ClassifierModel model;
};

inline pcvar::ClassifierModel cached_model(const pcvar::AppConfig& cfg, const pcvar::Dataset& train,
                                           const std::string& tag) {
  namespace fs = std::filesystem;
  const auto key = std::hash<std::string>{}(pcvar::config_to_json(cfg) + tag);
  const fs::path dir = PCVAR_TEST_CACHE;
  const fs::path path = dir / (tag + "_" + std::to_string(key) + ".json");
  if (fs::exists(path)) return pcvar::load_model(path);
  auto model = pcvar::train_from_config(cfg, train);
  fs::create_directories(dir);
  const fs::path tmp = path.string() + ".tmp";
  pcvar::save_model(model, tmp);
  fs::rename(tmp, path);
  return model;
}

/// Default config, clean training.
inline const Desk& clean_desk() {
  static const Desk desk = [] {
    Desk d;
    d.cfg.finalize();
    d.data = pcvar::make_datasets(d.cfg);
    d.model = cached_model(d.cfg, d.data.train, "clean");
    return d;
  }();
  return desk;
}

/// Default config, poison-label training with the default trigger.
inline const Desk& poisoned_desk() {
  static const Desk desk = [] {
    Desk d;
    d.cfg.finalize();
    d.data = pcvar::make_datasets(d.cfg);
    d.model = cached_model(d.cfg, pcvar::poison_from_config(d.cfg, d.data.train), "poisoned");
    return d;
  }();
  return desk;
}

}  // namespace fixture
