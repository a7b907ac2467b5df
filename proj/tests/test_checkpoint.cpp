#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ewer/binning.hpp"
#include "ewer/checkpoint.hpp"
#include "ewer/errors.hpp"
#include "ewer/model.hpp"
#include "ewer/rng.hpp"
#include "ewer/util.hpp"
#include "fixtures.hpp"

using ewer::BlockLayout;
using ewer::FeatureSet;
using ewer::ModelConfig;
using ewer::ModelParams;
using ewer::Rng;

namespace {

struct Trained {
  FeatureSet data;
  std::vector<int> labels;
  std::vector<double> wers;
  ewer::TrainResult result;
};

Trained train_small(std::uint64_t seed) {
  Trained t;
  t.data.layout.blocks = {{"a", 3}, {"b", 2}};
  const int n = 18;
  t.data.data.resize(n, 5);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 5; ++j) t.data.data(i, j) = rng.normal(0.0, 1.0);
    t.data.ids.push_back("u" + std::to_string(i));
    t.labels.push_back(i % 3);
    t.wers.push_back(25.0 * (i % 3));
  }
  ewer::ClassMap map = ewer::build_balanced(t.wers, 3);

  ModelConfig config;
  config.default_proj_dim = 4;
  config.hidden_dims = {6};
  config.epochs = 3;
  config.batch_size = 6;
  config.dropout = 0.0;
  config.seed = seed;
  t.result =
      ewer::train_single(t.data, t.labels, t.data, t.wers, map, config);
  return t;
}

}  // namespace

TEST_CASE("a single-task model survives a save/load round trip") {
  fixtures::TempDir dir("ewer-ckpt");
  const Trained t = train_small(5);
  const std::string path = dir.file("model.ewermodl");
  ewer::save_model(t.result.params, path);

  const ModelParams back = ewer::load_model(path);
  CHECK(back.layout == t.result.params.layout);
  CHECK(back.tensor_names == t.result.params.tensor_names);
  REQUIRE(back.tensors.size() == t.result.params.tensors.size());
  for (std::size_t i = 0; i < back.tensors.size(); ++i)
    CHECK(back.tensors[i] == t.result.params.tensors[i]);
  CHECK(back.class_map.kind == t.result.params.class_map.kind);
  CHECK(back.class_map.wer_fixed == t.result.params.class_map.wer_fixed);
  CHECK(back.class_map.ranges == t.result.params.class_map.ranges);
  CHECK(ewer::model_config_to_json(back.config) ==
        ewer::model_config_to_json(t.result.params.config));

  Rng rng(321);
  for (int trial = 0; trial < 100; ++trial) {
    ewer::FeatureVector fv;
    fv.layout = t.data.layout;
    fv.values.resize(5);
    for (int j = 0; j < 5; ++j) fv.values[j] = rng.normal(0.0, 2.0);
    const ewer::Prediction a = ewer::predict_single(t.result.params, fv);
    const ewer::Prediction b = ewer::predict_single(back, fv);
    CHECK(a.expected_wer == b.expected_wer);
    CHECK(a.argmax_class == b.argmax_class);
    CHECK(a.probs == b.probs);
  }

  CHECK(ewer::checkpoint_task(path) == ModelConfig::Task::single);

  // Saving the identical model again produces identical bytes.
  const std::string again = dir.file("model2.ewermodl");
  ewer::save_model(t.result.params, again);
  CHECK(ewer::read_file(path) == ewer::read_file(again));
}

TEST_CASE("corrupted checkpoints are detected") {
  fixtures::TempDir dir("ewer-ckpt");
  const Trained t = train_small(6);
  const std::string path = dir.file("model.ewermodl");
  ewer::save_model(t.result.params, path);
  const std::string raw = ewer::read_file(path);

  auto expect_code = [&](const std::string& bytes, const std::string& code) {
    const std::string bad_path = dir.file("bad.ewermodl");
    ewer::write_file(bad_path, bytes);
    try {
      ewer::load_model(bad_path);
      FAIL("expected an error");
    } catch (const ewer::Error& e) {
      CHECK(e.code() == code);
    }
  };

  SUBCASE("magic") {
    std::string bad = raw;
    bad[0] ^= 0x5a;
    expect_code(bad, "UnsupportedFormat");
  }
  SUBCASE("version flip alone, checksum untouched") {
    std::string bad = raw;
    bad[8] = 2;
    expect_code(bad, "VersionMismatch");
  }
  SUBCASE("payload byte") {
    std::string bad = raw;
    bad[raw.size() / 2] ^= 0x5a;
    expect_code(bad, "ChecksumMismatch");
  }
  SUBCASE("trailing truncation") {
    expect_code(raw.substr(0, raw.size() - 9), "ChecksumMismatch");
  }
  SUBCASE("hard truncation") { expect_code(raw.substr(0, 10), "ChecksumMismatch"); }
  SUBCASE("not a checkpoint at all") { expect_code("hello world", "UnsupportedFormat"); }
}

TEST_CASE("a double-task pair survives a save/load round trip") {
  fixtures::TempDir dir("ewer-ckpt");
  FeatureSet data;
  data.layout.blocks = {{"a", 4}};
  const int n = 20;
  data.data.resize(n, 4);
  Rng rng(9);
  std::vector<int> err_counts, n_counts;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) data.data(i, j) = rng.normal(0.0, 1.0);
    data.ids.push_back("u" + std::to_string(i));
    err_counts.push_back(i % 4);
    n_counts.push_back(3 + i % 6);
  }

  ModelConfig config;
  config.default_proj_dim = 4;
  config.hidden_dims = {6};
  config.epochs = 2;
  config.batch_size = 8;
  config.dropout = 0.0;
  config.err_max = 6;
  config.n_min = 2;
  config.n_max = 10;
  const ewer::DoubleTrainResult trained = ewer::train_double(
      data, err_counts, n_counts, data, err_counts, n_counts, config);

  const std::string path = dir.file("double.ewermodl");
  ewer::save_double_model(trained.err, trained.n, path);
  CHECK(ewer::checkpoint_task(path) == ModelConfig::Task::double_task);

  const auto [err_back, n_back] = ewer::load_double_model(path);
  CHECK(err_back.ladder == trained.err.ladder);
  CHECK(n_back.ladder == trained.n.ladder);
  for (std::size_t i = 0; i < err_back.tensors.size(); ++i)
    CHECK(err_back.tensors[i] == trained.err.tensors[i]);
  for (std::size_t i = 0; i < n_back.tensors.size(); ++i)
    CHECK(n_back.tensors[i] == trained.n.tensors[i]);

  for (Eigen::Index i = 0; i < data.data.rows(); ++i) {
    CHECK(ewer::predict_double(err_back, n_back, data.row(i)) ==
          ewer::predict_double(trained.err, trained.n, data.row(i)));
  }
}

TEST_CASE("loading a checkpoint with the wrong task loader fails") {
  fixtures::TempDir dir("ewer-ckpt");
  const Trained t = train_small(15);
  const std::string single_path = dir.file("single.ewermodl");
  ewer::save_model(t.result.params, single_path);

  try {
    ewer::load_double_model(single_path);
    FAIL("expected an error");
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "TaskMismatch");
  }

  FeatureSet data;
  data.layout.blocks = {{"a", 3}};
  data.data.resize(6, 3);
  Rng rng(2);
  std::vector<int> err_counts, n_counts;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 3; ++j) data.data(i, j) = rng.normal(0.0, 1.0);
    data.ids.push_back("u" + std::to_string(i));
    err_counts.push_back(i % 2);
    n_counts.push_back(4);
  }
  ModelConfig config;
  config.default_proj_dim = 3;
  config.hidden_dims = {4};
  config.epochs = 1;
  config.dropout = 0.0;
  config.err_max = 3;
  const ewer::DoubleTrainResult trained = ewer::train_double(
      data, err_counts, n_counts, data, err_counts, n_counts, config);
  const std::string double_path = dir.file("double.ewermodl");
  ewer::save_double_model(trained.err, trained.n, double_path);

  try {
    ewer::load_model(double_path);
    FAIL("expected an error");
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "TaskMismatch");
  }
}

TEST_CASE("a loaded model rejects features with a different layout") {
  fixtures::TempDir dir("ewer-ckpt");
  const Trained t = train_small(30);
  const std::string path = dir.file("model.ewermodl");
  ewer::save_model(t.result.params, path);
  const ModelParams back = ewer::load_model(path);

  ewer::FeatureVector fv;
  fv.layout.blocks = {{"a", 3}};  // half the trained layout
  fv.values = Eigen::VectorXd::Zero(3);
  try {
    ewer::predict_single(back, fv);
    FAIL("expected an error");
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "ShapeMismatch");
  }
}
