#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ewer/errors.hpp"
#include "ewer/eval.hpp"
#include "ewer/rng.hpp"
#include "ewer/util.hpp"
#include "fixtures.hpp"

using ewer::binned_curve;
using ewer::confusion;
using ewer::CurveRow;
using ewer::mae_rmse;
using ewer::ModelConfig;
using ewer::Rng;
using ewer::SweepData;
using ewer::SweepRow;

TEST_CASE("mae and rmse on a worked example") {
  const std::vector<double> pred{10, 20, 30, 40};
  const std::vector<double> truth{15, 5, 45, 30};
  const auto [mae, rmse] = mae_rmse(pred, truth);
  CHECK(mae == 11.25);
  CHECK(rmse == doctest::Approx(std::sqrt(143.75)).epsilon(1e-12));
  CHECK(rmse * rmse * 4.0 == doctest::Approx(575.0).epsilon(1e-9));
  CHECK(rmse >= mae);
}

TEST_CASE("mae and rmse ignore sample order") {
  Rng rng(1);
  std::vector<double> pred, truth;
  for (int i = 0; i < 64; ++i) {
    pred.push_back(rng.uniform(0.0, 120.0));
    truth.push_back(rng.uniform(0.0, 120.0));
  }
  const auto [mae, rmse] = mae_rmse(pred, truth);

  std::vector<std::size_t> order(pred.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<double> pred2, truth2;
  for (std::size_t i : order) {
    pred2.push_back(pred[i]);
    truth2.push_back(truth[i]);
  }
  const auto [mae2, rmse2] = mae_rmse(pred2, truth2);
  CHECK(mae2 == doctest::Approx(mae).epsilon(1e-12));
  CHECK(rmse2 == doctest::Approx(rmse).epsilon(1e-12));
}

TEST_CASE("mae and rmse input validation") {
  try {
    mae_rmse(std::vector<double>{1.0}, std::vector<double>{});
    FAIL("expected an error");
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "LengthMismatch");
  }
  try {
    mae_rmse(std::vector<double>{}, std::vector<double>{});
    FAIL("expected an error");
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "Empty");
  }
}

TEST_CASE("confusion counts true rows against predicted columns") {
  const std::vector<int> pred{0, 1, 1, 2, 2, 2};
  const std::vector<int> truth{0, 1, 2, 2, 2, 0};
  const Eigen::MatrixXi m = confusion(pred, truth, 3);
  Eigen::MatrixXi expected(3, 3);
  expected << 1, 0, 1,  //
      0, 1, 0,          //
      0, 1, 2;
  CHECK(m == expected);
  CHECK(m.sum() == 6);
  CHECK(m.row(0).sum() == 2);  // row sums count true classes
  CHECK(m.row(2).sum() == 3);

  try {
    confusion(std::vector<int>{3}, std::vector<int>{0}, 3);
    FAIL("expected an error");
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "IndexOutOfRange");
  }
  try {
    confusion(std::vector<int>{0}, std::vector<int>{-1}, 3);
    FAIL("expected an error");
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "IndexOutOfRange");
  }
  try {
    confusion(std::vector<int>{0}, std::vector<int>{0, 1}, 3);
    FAIL("expected an error");
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "LengthMismatch");
  }
}

TEST_CASE("scaled confusion maps each row onto one to one hundred") {
  Eigen::MatrixXi counts(2, 2);
  counts << 0, 0,  //
      3, 1;
  const Eigen::MatrixXd scaled = ewer::confusion_scaled(counts);
  CHECK(scaled(0, 0) == 1.0);
  CHECK(scaled(0, 1) == 1.0);
  CHECK(scaled(1, 0) == 100.0);
  CHECK(scaled(1, 1) == 34.0);
  CHECK(scaled.minCoeff() >= 1.0);
  CHECK(scaled.maxCoeff() <= 100.0);
}

TEST_CASE("binned curve groups by true value with stable ties") {
  SUBCASE("identity predictions") {
    std::vector<double> truth{50, 10, 0, 30, 90, 20, 70, 40, 60, 80};
    const std::vector<CurveRow> curve = binned_curve(truth, truth, 3);
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].count == 4);
    CHECK(curve[1].count == 3);
    CHECK(curve[2].count == 3);
    long total = 0;
    for (std::size_t b = 0; b < curve.size(); ++b) {
      CHECK(curve[b].bin == static_cast<int>(b));
      CHECK(curve[b].true_mean == curve[b].pred_mean);
      total += curve[b].count;
      if (b > 0) CHECK(curve[b].true_mean > curve[b - 1].true_mean);
    }
    CHECK(total == 10);
    CHECK(curve[0].true_mean == 15.0);  // (0+10+20+30)/4
    CHECK(curve[2].true_mean == 80.0);  // (70+80+90)/3
  }
  SUBCASE("equal truths keep input order") {
    const std::vector<double> truth{1, 1, 1, 1};
    const std::vector<double> pred{10, 20, 30, 40};
    const std::vector<CurveRow> curve = binned_curve(pred, truth, 2);
    CHECK(curve[0].pred_mean == 15.0);
    CHECK(curve[1].pred_mean == 35.0);
  }
  SUBCASE("validation") {
    try {
      binned_curve(std::vector<double>{1, 2}, std::vector<double>{1, 2}, 3);
      FAIL("expected an error");
    } catch (const ewer::Error& e) {
      CHECK(e.code() == "TooFewSamples");
    }
    try {
      binned_curve(std::vector<double>{1, 2}, std::vector<double>{1, 2}, 1);
      FAIL("expected an error");
    } catch (const ewer::Error& e) {
      CHECK(e.code() == "InvalidConfig");
    }
  }
}

TEST_CASE("evaluate composes the individual metrics") {
  std::vector<double> pred, truth;
  std::vector<int> pred_c, true_c;
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    pred.push_back(rng.uniform(0.0, 100.0));
    truth.push_back(rng.uniform(0.0, 100.0));
    pred_c.push_back(static_cast<int>(rng.uniform_int(4)));
    true_c.push_back(static_cast<int>(rng.uniform_int(4)));
  }
  const ewer::EvalReport report = ewer::evaluate(pred, truth, pred_c, true_c, 4, 5);
  const auto [mae, rmse] = mae_rmse(pred, truth);
  CHECK(report.mae == mae);
  CHECK(report.rmse == rmse);
  CHECK(report.n == 20);
  CHECK(report.confusion == confusion(pred_c, true_c, 4));
  CHECK(report.curve.size() == 5);
}

TEST_CASE("csv writers emit pinned layouts") {
  fixtures::TempDir dir("ewer-eval");

  SUBCASE("report") {
    ewer::EvalReport report;
    report.mae = 11.25;
    report.rmse = std::sqrt(143.75);
    report.n = 4;
    const std::string path = dir.file("report.csv");
    ewer::write_report_csv(report, "model", path);
    CHECK(ewer::read_file(path) ==
          "metric,name,value\nmae,model,11.25\nrmse,model," +
              ewer::fmt_double(std::sqrt(143.75)) + "\nn,model,4\n");
  }
  SUBCASE("confusion") {
    Eigen::MatrixXi counts(2, 2);
    counts << 2, 1,  //
        0, 3;
    const std::string path = dir.file("confusion.csv");
    ewer::write_confusion_csv(counts, path);
    CHECK(ewer::read_file(path) == "pred_0,pred_1\n2,1\n0,3\n");
  }
  SUBCASE("curve") {
    std::vector<CurveRow> curve{{0, 5.5, 6.25, 3}, {1, 50.0, 40.5, 3}};
    const std::string path = dir.file("curve.csv");
    ewer::write_curve_csv(curve, path);
    CHECK(ewer::read_file(path) ==
          "bin,true_mean,pred_mean,count\n0,5.5,6.25,3\n1,50,40.5,3\n");
  }
  SUBCASE("sweep") {
    std::vector<SweepRow> rows{{"0", 1, 1.5, 2.5}, {"fixed", 2, 3.0, 4.0}};
    const std::string path = dir.file("sweep.csv");
    ewer::write_sweep_csv(rows, path);
    CHECK(ewer::read_file(path) ==
          "param,seed,mae,rmse\n0,1,1.5,2.5\nfixed,2,3,4\n");
  }
}

namespace {

struct SweepFixture {
  ewer::FeatureSet train, dev, test;
  SweepData data;
  ModelConfig config;

  SweepFixture() {
    auto fill = [](ewer::FeatureSet& set, int n, std::uint64_t seed,
                   const char* prefix) {
      set.layout.blocks = {{"a", 4}};
      set.data.resize(n, 4);
      Rng rng(seed);
      std::vector<double> wers;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 4; ++j) set.data(i, j) = rng.normal(0.0, 1.0);
        set.data(i, 0) += 0.05 * (i % 12);
        set.ids.push_back(prefix + std::to_string(i));
        wers.push_back(3.0 * i + 0.25 * static_cast<double>(seed % 3));
      }
      return wers;
    };
    std::vector<double> train_wers = fill(train, 36, 100, "tr");
    data.dev_wer = fill(dev, 12, 200, "dv");
    data.test_wer = fill(test, 12, 300, "te");
    for (std::size_t i = 0; i < train_wers.size(); ++i)
      data.train_wer.emplace_back(train.ids[i], train_wers[i]);
    data.train_x = &train;
    data.dev_x = &dev;
    data.test_x = &test;

    config.default_proj_dim = 4;
    config.hidden_dims = {8};
    config.k = 3;
    config.dropout = 0.0;
    config.epochs = 2;
    config.batch_size = 12;
  }
};

}  // namespace

TEST_CASE("alpha sweep runs the full grid in declared order") {
  const SweepFixture fx;
  const std::vector<SweepRow> rows =
      ewer::sweep_alpha(fx.data, fx.config, {0.0, 50.0}, {1, 2});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].param == "0");
  CHECK(rows[0].seed == 1);
  CHECK(rows[1].param == "0");
  CHECK(rows[1].seed == 2);
  CHECK(rows[2].param == "50");
  CHECK(rows[2].seed == 1);
  CHECK(rows[3].param == "50");
  CHECK(rows[3].seed == 2);
  for (const SweepRow& row : rows) {
    CHECK(std::isfinite(row.mae));
    CHECK(row.mae >= 0.0);
    CHECK(row.rmse >= row.mae);
  }

  const std::vector<SweepRow> again =
      ewer::sweep_alpha(fx.data, fx.config, {0.0, 50.0}, {1, 2});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].mae == rows[i].mae);
    CHECK(again[i].rmse == rows[i].rmse);
  }
}

TEST_CASE("k sweep appends the fixed-map baseline last") {
  const SweepFixture fx;
  const std::vector<SweepRow> rows =
      ewer::sweep_k(fx.data, fx.config, {3, 4}, {7});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].param == "3");
  CHECK(rows[1].param == "4");
  CHECK(rows[2].param == "fixed");
  for (const SweepRow& row : rows) {
    CHECK(row.seed == 7);
    CHECK(std::isfinite(row.mae));
    CHECK(std::isfinite(row.rmse));
  }
}

TEST_CASE("sweep results are independent of the worker count") {
  const SweepFixture fx;
  const std::vector<SweepRow> serial =
      ewer::sweep_alpha(fx.data, fx.config, {0.0, 10.0}, {1, 2}, 1);
  const std::vector<SweepRow> threaded =
      ewer::sweep_alpha(fx.data, fx.config, {0.0, 10.0}, {1, 2}, 3);
  REQUIRE(serial.size() == threaded.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].param == threaded[i].param);
    CHECK(serial[i].seed == threaded[i].seed);
    CHECK(serial[i].mae == threaded[i].mae);
    CHECK(serial[i].rmse == threaded[i].rmse);
  }
}

TEST_CASE("sweeps reject empty grids") {
  const SweepFixture fx;
  auto expect_invalid = [](auto&& fn) {
    try {
      fn();
      FAIL("expected an error");
    } catch (const ewer::Error& e) {
      CHECK(e.code() == "InvalidConfig");
    }
  };
  expect_invalid([&] { ewer::sweep_alpha(fx.data, fx.config, {}, {1}); });
  expect_invalid([&] { ewer::sweep_alpha(fx.data, fx.config, {1.0}, {}); });
  expect_invalid([&] { ewer::sweep_k(fx.data, fx.config, {}, {1}); });
  expect_invalid([&] { ewer::sweep_k(fx.data, fx.config, {3}, {}); });
}
