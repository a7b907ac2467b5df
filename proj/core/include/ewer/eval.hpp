#ifndef EWER_EVAL_HPP_
#define EWER_EVAL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ewer/binning.hpp"
#include "ewer/model.hpp"

namespace ewer {

// Mean absolute error and root mean square error, both in percent points.
// Throws LengthMismatch / Empty.
std::pair<double, double> mae_rmse(std::span<const double> pred,
                                   std::span<const double> truth);

// Cell (i, j) counts samples of true class i predicted as class j.
// Throws IndexOutOfRange.
Eigen::MatrixXi confusion(std::span<const int> pred_classes,
                          std::span<const int> true_classes, int k);

// Display form: each row is mapped to [1, 100] against its own maximum
// (all-zero rows become all 1).
Eigen::MatrixXd confusion_scaled(const Eigen::MatrixXi& counts);

struct CurveRow {
  int bin = 0;
  double true_mean = 0.0;
  double pred_mean = 0.0;
  long count = 0;
};

// Sorts by true WER, splits into n_bins equal-count groups (sizes differ
// by at most one, earlier groups take the extra sample) and reports group
// means. Throws TooFewSamples when samples < n_bins.
std::vector<CurveRow> binned_curve(std::span<const double> pred,
                                   std::span<const double> truth, int n_bins);

struct EvalReport {
  double mae = 0.0;
  double rmse = 0.0;
  long n = 0;
  Eigen::MatrixXi confusion;
  std::vector<CurveRow> curve;
  std::vector<std::tuple<std::uint64_t, double, double>> per_seed;
};

EvalReport evaluate(std::span<const double> pred_wer,
                    std::span<const double> true_wer,
                    std::span<const int> pred_classes,
                    std::span<const int> true_classes, int k, int n_bins);

// One sweep experiment: train / dev / test features with aligned targets.
// train_wer pairs ids with WER so rank-based label assignment can break
// ties the same way everywhere.
struct SweepData {
  const FeatureSet* train_x = nullptr;
  std::vector<std::pair<std::string, double>> train_wer;
  const FeatureSet* dev_x = nullptr;
  std::vector<double> dev_wer;
  const FeatureSet* test_x = nullptr;
  std::vector<double> test_wer;
};

struct SweepRow {
  std::string param;
  std::uint64_t seed = 0;
  double mae = 0.0;
  double rmse = 0.0;
};

// Balanced k classes from the training WERs, one training run per
// (alpha, seed), test-set MAE/RMSE per run. Rows come out in (alpha, seed)
// order regardless of workers.
std::vector<SweepRow> sweep_alpha(const SweepData& data,
                                  const ModelConfig& config,
                                  const std::vector<double>& alphas,
                                  const std::vector<std::uint64_t>& seeds,
                                  int workers = 1);

// One training run per (k, seed) with rebuilt balanced classes, plus the
// fixed imbalanced map as baseline rows (param "fixed").
std::vector<SweepRow> sweep_k(const SweepData& data, const ModelConfig& config,
                              const std::vector<int>& ks,
                              const std::vector<std::uint64_t>& seeds,
                              int workers = 1);

void write_report_csv(const EvalReport& report, const std::string& name,
                      const std::string& path);
void write_confusion_csv(const Eigen::MatrixXi& counts, const std::string& path);
void write_curve_csv(const std::vector<CurveRow>& curve, const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace ewer

#endif  // EWER_EVAL_HPP_
