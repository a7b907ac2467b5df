#include "ewer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>

#include "ewer/errors.hpp"
#include "ewer/util.hpp"

namespace ewer {

namespace {

// Equal-count group sizes, earlier groups take the remainder.
std::vector<long> group_sizes(long total, int groups) {
  std::vector<long> sizes(static_cast<std::size_t>(groups), total / groups);
  for (long i = 0; i < total % groups; ++i) ++sizes[static_cast<std::size_t>(i)];
  return sizes;
}

std::vector<int> training_labels(const SweepData& data, const ClassMap& map) {
  std::vector<int> labels;
  if (map.kind == ClassMap::Kind::balanced) {
    labels = assign_training(data.train_wer, map.k());
  } else {
    labels.reserve(data.train_wer.size());
    for (const auto& [id, w] : data.train_wer)
      labels.push_back(assign(map, w));
  }
  return labels;
}

SweepRow run_cell(const SweepData& data, const ClassMap& map,
                  const std::vector<int>& labels, const ModelConfig& config,
                  const std::string& param, std::uint64_t seed) {
  ModelConfig c = config;
  c.seed = seed;
  TrainResult r =
      train_single(*data.train_x, labels, *data.dev_x, data.dev_wer, map, c);
  std::vector<Prediction> preds = predict_single_batch(r.params, *data.test_x);
  std::vector<double> wer;
  wer.reserve(preds.size());
  for (const Prediction& p : preds) wer.push_back(p.expected_wer);
  auto [mae, rmse] = mae_rmse(wer, data.test_wer);
  return SweepRow{param, seed, mae, rmse};
}

void run_cells(std::vector<SweepRow>& rows,
               const std::vector<std::function<SweepRow()>>& cells,
               int workers) {
  rows.resize(cells.size());
  if (workers <= 1 || cells.size() < 2) {
    for (std::size_t i = 0; i < cells.size(); ++i) rows[i] = cells[i]();
    return;
  }
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(workers), cells.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < cells.size(); i += n_workers)
        rows[i] = cells[i]();
    });
  for (auto& t : pool) t.join();
}

std::vector<double> train_wer_values(const SweepData& data) {
  std::vector<double> wers;
  wers.reserve(data.train_wer.size());
  for (const auto& [id, w] : data.train_wer) wers.push_back(w);
  return wers;
}

}  // namespace

std::pair<double, double> mae_rmse(std::span<const double> pred,
                                   std::span<const double> truth) {
  if (pred.size() != truth.size())
    throw input_error("LengthMismatch",
                      std::to_string(pred.size()) + " predictions vs " +
                          std::to_string(truth.size()) + " references");
  if (pred.empty()) throw input_error("Empty", "no samples to score");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(pred.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

Eigen::MatrixXi confusion(std::span<const int> pred_classes,
                          std::span<const int> true_classes, int k) {
  if (pred_classes.size() != true_classes.size())
    throw input_error("LengthMismatch", "class lists differ in length");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < pred_classes.size(); ++i) {
    const int t = true_classes[i];
    const int p = pred_classes[i];
    if (t < 0 || t >= k || p < 0 || p >= k)
      throw input_error("IndexOutOfRange",
                        "class outside 0.." + std::to_string(k - 1));
    ++m(t, p);
  }
  return m;
}

Eigen::MatrixXd confusion_scaled(const Eigen::MatrixXi& counts) {
  Eigen::MatrixXd out(counts.rows(), counts.cols());
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    const int row_max = counts.row(r).maxCoeff();
    for (Eigen::Index c = 0; c < counts.cols(); ++c)
      out(r, c) = row_max == 0
                      ? 1.0
                      : 1.0 + 99.0 * counts(r, c) / static_cast<double>(row_max);
  }
  return out;
}

std::vector<CurveRow> binned_curve(std::span<const double> pred,
                                   std::span<const double> truth, int n_bins) {
  if (n_bins < 2) throw input_error("InvalidConfig", "need at least 2 bins");
  if (pred.size() != truth.size())
    throw input_error("LengthMismatch", "prediction and truth lengths differ");
  if (pred.size() < static_cast<std::size_t>(n_bins))
    throw input_error("TooFewSamples",
                      std::to_string(pred.size()) + " samples for " +
                          std::to_string(n_bins) + " bins");

  std::vector<std::size_t> order(pred.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return truth[a] < truth[b];
  });

  std::vector<CurveRow> curve;
  const std::vector<long> sizes =
      group_sizes(static_cast<long>(pred.size()), n_bins);
  std::size_t pos = 0;
  for (int b = 0; b < n_bins; ++b) {
    CurveRow row;
    row.bin = b;
    row.count = sizes[static_cast<std::size_t>(b)];
    for (long i = 0; i < row.count; ++i, ++pos) {
      row.true_mean += truth[order[pos]];
      row.pred_mean += pred[order[pos]];
    }
    row.true_mean /= static_cast<double>(row.count);
    row.pred_mean /= static_cast<double>(row.count);
    curve.push_back(row);
  }
  return curve;
}

EvalReport evaluate(std::span<const double> pred_wer,
                    std::span<const double> true_wer,
                    std::span<const int> pred_classes,
                    std::span<const int> true_classes, int k, int n_bins) {
  EvalReport report;
  auto [mae, rmse] = mae_rmse(pred_wer, true_wer);
  report.mae = mae;
  report.rmse = rmse;
  report.n = static_cast<long>(pred_wer.size());
  report.confusion = confusion(pred_classes, true_classes, k);
  report.curve = binned_curve(pred_wer, true_wer, n_bins);
  return report;
}

std::vector<SweepRow> sweep_alpha(const SweepData& data,
                                  const ModelConfig& config,
                                  const std::vector<double>& alphas,
                                  const std::vector<std::uint64_t>& seeds,
                                  int workers) {
  if (alphas.empty()) throw input_error("InvalidConfig", "no alphas to sweep");
  if (seeds.empty()) throw input_error("InvalidConfig", "no seeds to sweep");

  const std::vector<double> wers = train_wer_values(data);
  const ClassMap map = build_balanced(wers, config.k);
  const std::vector<int> labels = training_labels(data, map);

  std::vector<std::function<SweepRow()>> cells;
  for (double alpha : alphas)
    for (std::uint64_t seed : seeds)
      cells.emplace_back([&, alpha, seed] {
        ModelConfig c = config;
        c.loss.kind = LossConfig::Kind::distance;
        c.loss.alpha = alpha;
        return run_cell(data, map, labels, c, fmt_double(alpha), seed);
      });

  std::vector<SweepRow> rows;
  run_cells(rows, cells, workers);
  return rows;
}

std::vector<SweepRow> sweep_k(const SweepData& data, const ModelConfig& config,
                              const std::vector<int>& ks,
                              const std::vector<std::uint64_t>& seeds,
                              int workers) {
  if (ks.empty()) throw input_error("InvalidConfig", "no ks to sweep");
  if (seeds.empty()) throw input_error("InvalidConfig", "no seeds to sweep");

  const std::vector<double> wers = train_wer_values(data);

  struct Variant {
    std::string param;
    ClassMap map;
    std::vector<int> labels;
  };
  std::vector<Variant> variants;
  for (int k : ks) {
    Variant v;
    v.param = std::to_string(k);
    v.map = build_balanced(wers, k);
    v.labels = training_labels(data, v.map);
    variants.push_back(std::move(v));
  }
  {
    Variant v;
    v.param = "fixed";
    v.map = build_fixed(fixed_default_values());
    v.labels = training_labels(data, v.map);
    variants.push_back(std::move(v));
  }

  std::vector<std::function<SweepRow()>> cells;
  for (const Variant& v : variants)
    for (std::uint64_t seed : seeds)
      cells.emplace_back([&data, &config, &v, seed] {
        return run_cell(data, v.map, v.labels, config, v.param, seed);
      });

  std::vector<SweepRow> rows;
  run_cells(rows, cells, workers);
  return rows;
}

void write_report_csv(const EvalReport& report, const std::string& name,
                      const std::string& path) {
  CsvWriter csv(path, {"metric", "name", "value"});
  csv.row({"mae", name, fmt_double(report.mae)});
  csv.row({"rmse", name, fmt_double(report.rmse)});
  csv.row({"n", name, std::to_string(report.n)});
  csv.close();
}

void write_confusion_csv(const Eigen::MatrixXi& counts, const std::string& path) {
  std::vector<std::string> header;
  for (Eigen::Index c = 0; c < counts.cols(); ++c)
    header.push_back("pred_" + std::to_string(c));
  CsvWriter csv(path, header);
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    std::vector<std::string> cells;
    for (Eigen::Index c = 0; c < counts.cols(); ++c)
      cells.push_back(std::to_string(counts(r, c)));
    csv.row(cells);
  }
  csv.close();
}

void write_curve_csv(const std::vector<CurveRow>& curve, const std::string& path) {
  CsvWriter csv(path, {"bin", "true_mean", "pred_mean", "count"});
  for (const CurveRow& row : curve)
    csv.row({std::to_string(row.bin), fmt_double(row.true_mean),
             fmt_double(row.pred_mean), std::to_string(row.count)});
  csv.close();
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  CsvWriter csv(path, {"param", "seed", "mae", "rmse"});
  for (const SweepRow& row : rows)
    csv.row({row.param, std::to_string(row.seed), fmt_double(row.mae),
             fmt_double(row.rmse)});
  csv.close();
}

}  // namespace ewer
