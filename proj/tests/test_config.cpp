#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "kgalign/config.hpp"

using kgalign::Precision;
using kgalign::RunConfig;

namespace fs = std::filesystem;

namespace {

fs::path write_temp_config(const std::string& text) {
  static int counter = 0;
  const fs::path p = fs::temp_directory_path() /
                     ("kgalign_cfg_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++) + ".cfg");
  std::ofstream out(p);
  out << text;
  return p;
}

}  // namespace

TEST_CASE("config parsing with comments and overrides") {
  const auto file = write_temp_config(
      "# a comment line\n"
      "seed = 123\n"
      "train.lr = 0.01   # trailing comment\n"
      "\n"
      "precision = f64\n"
      "synthetic.entities = 99\n");
  auto cfg = kgalign::parse_config_file(file);
  CHECK(cfg.train.seed == 123);
  CHECK(cfg.train.lr == doctest::Approx(0.01));
  CHECK(cfg.precision == Precision::kFloat64);
  CHECK(cfg.synthetic.n_entities == 99);
  // untouched keys keep their defaults
  CHECK(cfg.train.lambda == doctest::Approx(100.0));
  CHECK(cfg.train.margin == doctest::Approx(1.0));
  CHECK(cfg.train.epsilon == doctest::Approx(0.9));
  CHECK(cfg.train.d_ent == 256);
  CHECK(cfg.train.d_rel == 128);
  CHECK(cfg.train.dropout == doctest::Approx(0.2));
  CHECK(cfg.train.weight_decay == doctest::Approx(1e-5));
  CHECK(cfg.train.negatives_per_side == 5);
  CHECK(cfg.train.layers == 2);
  CHECK(cfg.train.refresh_period == 10);

  kgalign::apply_overrides(cfg, {"train.lr=0.5", "seed=9"});
  CHECK(cfg.train.lr == doctest::Approx(0.5));
  CHECK(cfg.train.seed == 9);

  fs::remove(file);
}

TEST_CASE("unknown keys are a hard error") {
  const auto file = write_temp_config("train.learning_rate = 0.01\n");
  CHECK_THROWS_AS(kgalign::parse_config_file(file), kgalign::ConfigError);
  fs::remove(file);

  RunConfig cfg;
  CHECK_THROWS_AS(kgalign::apply_overrides(cfg, {"nope=1"}), kgalign::ConfigError);
  CHECK_THROWS_AS(kgalign::apply_overrides(cfg, {"no_equals"}), kgalign::ConfigError);
}

TEST_CASE("malformed values are rejected with the key named") {
  RunConfig cfg;
  try {
    kgalign::set_config_key(cfg, "train.lr", "fast");
    FAIL("expected ConfigError");
  } catch (const kgalign::ConfigError& e) {
    CHECK(std::string(e.what()).find("train.lr") != std::string::npos);
  }
  CHECK_THROWS_AS(kgalign::set_config_key(cfg, "seed", "12x"), kgalign::ConfigError);
  CHECK_THROWS_AS(kgalign::set_config_key(cfg, "precision", "f16"), kgalign::ConfigError);
  CHECK_THROWS_AS(kgalign::set_config_key(cfg, "ablation.contrastive", "maybe"),
                  kgalign::ConfigError);
}

TEST_CASE("serialize-parse round trip preserves every key") {
  RunConfig cfg;
  cfg.train.seed = 77;
  cfg.train.lr = 0.0025;
  cfg.train.pr = 0.1;
  cfg.precision = Precision::kFloat64;
  cfg.synthetic.perturb_ratio = 0.15;
  cfg.train.use_contrastive = false;
  cfg.output_dir = "runs/x";

  const auto file = write_temp_config(cfg.serialize());
  auto reparsed = kgalign::parse_config_file(file);
  CHECK(reparsed.serialize() == cfg.serialize());
  fs::remove(file);
}

TEST_CASE("pr outside the searched set requires allow_any_pr") {
  RunConfig cfg;
  cfg.train.pr = 0.2;
  CHECK_THROWS_AS(cfg.validate(), kgalign::ConfigError);
  cfg.allow_any_pr = true;
  CHECK_NOTHROW(cfg.validate());

  for (const double ok : {0.0, 0.05, 0.1, 0.15}) {
    RunConfig c;
    c.train.pr = ok;
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("openea source requires a path and a sane fold") {
  RunConfig cfg;
  cfg.data_source = kgalign::DataSource::kOpenEa;
  CHECK_THROWS_AS(cfg.validate(), kgalign::ConfigError);
  cfg.data_path = "/data/somewhere";
  CHECK_NOTHROW(cfg.validate());
  cfg.fold = 6;
  CHECK_THROWS_AS(cfg.validate(), kgalign::ConfigError);
}
