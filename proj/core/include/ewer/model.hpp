#ifndef EWER_MODEL_HPP_
#define EWER_MODEL_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ewer/binning.hpp"
#include "ewer/features.hpp"
#include "ewer/objective.hpp"
#include "ewer/rng.hpp"

namespace ewer {

struct OptimConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Network and training settings. hidden_dims defaults to the desk-scale
// [64, 32]; the full-scale stack [512, 256, 128, 64] is a config choice.
struct ModelConfig {
  enum class Task { single, double_task };

  std::map<std::string, int> proj_dims;  // per-block projection overrides
  int default_proj_dim = 32;
  std::vector<int> hidden_dims{64, 32};
  int k = 6;
  double dropout = 0.1;
  LossConfig loss;
  OptimConfig optim;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 1;
  Task task = Task::single;
  // Weight decay on signal-block projection weights only.
  double signal_l2 = 1e-4;
  // Double task label ranges: error counts 0..err_max, reference word
  // counts n_min..n_max; values outside are clipped to the nearest class.
  int err_max = 19;
  int n_min = 2;
  int n_max = 47;

  int proj_dim(const std::string& block) const {
    auto it = proj_dims.find(block);
    return it != proj_dims.end() ? it->second : default_proj_dim;
  }
};

void validate(const ModelConfig& config);  // throws InvalidConfig

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

// All learned state. Tensors are kept in one flat list (biases are 1 x n)
// so the optimizer, checkpoint writer, and gradient checks can treat them
// uniformly. Order: per block proj_w, proj_b, norm_gain, norm_bias; then
// per hidden layer w, b; then out/w, out/b.
struct ModelParams {
  ModelConfig config;
  BlockLayout layout;
  std::vector<std::string> tensor_names;
  std::vector<Eigen::MatrixXd> tensors;
  ClassMap class_map;          // single-task decoding
  std::vector<double> ladder;  // per-class counts for a double-task head
};

struct TrainHistory {
  std::vector<double> train_loss;  // mean per-sample loss, weight decay excluded
  std::vector<double> dev_mae;
  std::vector<double> dev_rmse;
  int best_epoch = -1;  // -1 when no epoch ran
};

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero,
// normalization gain 1 / bias 0. Fully determined by the seed.
ModelParams init(const ModelConfig& config, const BlockLayout& layout,
                 std::uint64_t seed);

struct ForwardCache {
  Eigen::MatrixXd x;
  std::vector<Eigen::MatrixXd> block_norm;  // normalized, before gain/bias
  std::vector<Eigen::VectorXd> block_inv_std;
  std::vector<Eigen::MatrixXd> acts;  // [0] concatenation, then hidden outputs
  std::vector<Eigen::MatrixXd> hidden_pre;
  std::vector<Eigen::MatrixXd> drop_mask;  // scaled; empty outside training
  Eigen::MatrixXd logits;
};

// Rows of x are samples laid out per params.layout. Per block: linear
// projection, then per-sample layer normalization over the block (epsilon
// 1e-5), then gain/bias; blocks concatenate into the hidden stack
// (linear + ReLU + inverted dropout in train_mode). Returns n x k logits.
Eigen::MatrixXd forward_batch(const ModelParams& params,
                              const Eigen::MatrixXd& x, bool train_mode,
                              Rng* rng, ForwardCache* cache);
Eigen::VectorXd forward_one(const ModelParams& params, const Eigen::VectorXd& x);

std::vector<Eigen::MatrixXd> zero_like(const ModelParams& params);

// Sum over the batch of d loss / d tensor, given d loss / d logits rows.
std::vector<Eigen::MatrixXd> backward_batch(const ModelParams& params,
                                            const ForwardCache& cache,
                                            const Eigen::MatrixXd& dlogits);

// Mean loss over the batch and its gradients, dropout disabled. decode
// holds the per-class values used by the distance term (fractional scale
// for WER classes); unused under plain cross entropy.
double batch_loss(const ModelParams& params, const Eigen::MatrixXd& x,
                  const std::vector<int>& labels, const Eigen::VectorXd& decode,
                  const LossConfig& loss);
std::vector<Eigen::MatrixXd> batch_loss_gradients(
    const ModelParams& params, const Eigen::MatrixXd& x,
    const std::vector<int>& labels, const Eigen::VectorXd& decode,
    const LossConfig& loss, double* loss_out);

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// Mini-batch Adam with a seeded per-epoch shuffle. After each epoch the
// dev set is decoded (probability-weighted class values) and scored; the
// returned parameters are the best dev-MAE epoch's snapshot. Labels come
// from the rank-based training assignment; dev_wer is in percent.
TrainResult train_single(const FeatureSet& train_x,
                         const std::vector<int>& train_labels,
                         const FeatureSet& dev_x,
                         const std::vector<double>& dev_wer,
                         const ClassMap& map, const ModelConfig& config);

struct DoubleTrainResult {
  ModelParams err;
  ModelParams n;
  TrainHistory err_history;
  TrainHistory n_history;
};

// Two independent heads over the same features: error counts (classes
// 0..err_max) and reference word counts (classes n_min..n_max), both
// trained with cross entropy; out-of-range counts clip to the end classes.
// Dev selection scores absolute count error of the argmax decoding.
DoubleTrainResult train_double(const FeatureSet& train_x,
                               const std::vector<int>& train_err,
                               const std::vector<int>& train_n,
                               const FeatureSet& dev_x,
                               const std::vector<int>& dev_err,
                               const std::vector<int>& dev_n,
                               const ModelConfig& config);

// Inference: softmax, probability-weighted WER against the stored class
// map, argmax class.
Prediction predict_single(const ModelParams& params, const FeatureVector& fv);
std::vector<Prediction> predict_single_batch(const ModelParams& params,
                                             const FeatureSet& set);

// Argmax count from a double-task head.
int predict_count(const ModelParams& head, const FeatureVector& fv);

// 100 * ERR_est / max(N_est, 1), both heads decoded by argmax.
double predict_double(const ModelParams& err_params, const ModelParams& n_params,
                      const FeatureVector& fv);
std::vector<double> predict_double_batch(const ModelParams& err_params,
                                         const ModelParams& n_params,
                                         const FeatureSet& set);

}  // namespace ewer

#endif  // EWER_MODEL_HPP_
