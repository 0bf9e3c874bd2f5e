#include <doctest.h>

#include <string>
#include <vector>

#include "pointcvar/config.hpp"

using namespace pcvar;

namespace {

ErrorCode code_of(const std::string& text, std::vector<std::string> overrides = {}) {
  try {
    parse_config(text, overrides);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("defaults") {
  const auto c = parse_config("");
  CHECK(c.seed == 0);
  CHECK(c.train_data.n_per_class == 100);
  CHECK(c.test_data.n_per_class == 25);
  CHECK(c.removal.method == RemovalMethod::Vanilla);
  CHECK(c.removal.delta == 0.95);
  CHECK(c.removal.rs_seed == 2);
  CHECK(c.noise.seed == 1);
  CHECK(c.score.k_neighbors == 4);
  CHECK(c.sweep_deltas.size() == 6);
}

TEST_CASE("sections, overrides and derived fields") {
  const std::string text = R"({"seed": 10, "noise": {"mode": "global", "fraction": 0.1},
                               "removal": {"method": "multistep", "steps": 20}})";
  const std::vector<std::string> overrides{"removal.delta=0.9", "data.test.n_points=500", "score.kind=max_logit"};
  const auto c = parse_config(text, overrides);
  CHECK(c.seed == 10);
  CHECK(c.train.seed == 10);
  CHECK(c.noise.seed == 11);
  CHECK(c.noise.count == 50);
  CHECK(c.removal.delta == 0.9);
  CHECK(c.removal.method == RemovalMethod::Multistep);
  CHECK(c.removal.score.kind == ClassScoreKind::MaxLogit);
  CHECK(c.test_data.n_points == 500);
}

TEST_CASE("trigger noise picks up the poison target and default count") {
  const auto c = parse_config(R"({"noise": {"mode": "trigger"}, "poison": {"target_label": 2}})");
  CHECK(c.noise.count == kDefaultTriggerPoints);
  CHECK(c.noise.target_label == 2);
  const auto t = trigger_spec(parse_config(""));
  CHECK(t.mode == NoiseMode::Trigger);
  CHECK(t.count == kDefaultTriggerPoints);
  CHECK(t.target_label == 0);
}

TEST_CASE("config errors") {
  CHECK(code_of("{not json") == ErrorCode::Config);
  CHECK(code_of("[1]") == ErrorCode::Config);
  CHECK(code_of(R"({"colour": 1})") == ErrorCode::Config);
  CHECK(code_of(R"({"removal": {"deltas": 1}})") == ErrorCode::Config);
  CHECK(code_of(R"({"removal": {"delta": "high"}})") == ErrorCode::Config);
  CHECK(code_of("", {"removal.delta=1.5"}) == ErrorCode::Config);
  CHECK(code_of("", {"removal.method=multistep", "removal.steps=1"}) == ErrorCode::Config);
  CHECK(code_of("", {"nodots"}) == ErrorCode::Config);
  CHECK_THROWS_AS(parse_config("", std::vector<std::string>{"removal.method=median"}), Error);
}

TEST_CASE("canonical JSON round-trips") {
  const auto c = parse_config(R"({"seed": 3, "noise": {"mode": "cluster", "count": 99}})");
  const auto again = parse_config(config_to_json(c));
  CHECK(config_to_json(again) == config_to_json(c));
}

TEST_CASE("dataset and training helpers are seeded") {
  auto c = parse_config("", std::vector<std::string>{"data.train.n_per_class=2", "data.test.n_per_class=1",
                                                     "data.train.n_points=32", "data.test.n_points=32",
                                                     "train.epochs=1"});
  const auto a = make_datasets(c);
  const auto b = make_datasets(c);
  CHECK(a.train.size() == 8);
  CHECK(a.test.size() == 4);
  CHECK(a.test.clouds == b.test.clouds);
  CHECK(train_from_config(c, a.train) == train_from_config(c, b.train));
  const auto poisoned = poison_from_config(c, a.train);
  std::size_t flagged = 0;
  for (const auto& cl : poisoned.clouds) flagged += cl.count(Provenance::Outlier) > 0;
  CHECK(flagged == 1);
}
