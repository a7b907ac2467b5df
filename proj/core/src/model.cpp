#include "ewer/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ewer/errors.hpp"

namespace ewer {

namespace {

using nlohmann::json;

constexpr double kNormEpsilon = 1e-5;

std::size_t block_tensor_base(std::size_t block) { return 4 * block; }
std::size_t hidden_tensor_base(std::size_t n_blocks, std::size_t layer) {
  return 4 * n_blocks + 2 * layer;
}
std::size_t output_tensor_base(std::size_t n_blocks, std::size_t n_hidden) {
  return 4 * n_blocks + 2 * n_hidden;
}

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  return m;
}

Eigen::VectorXd percent_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

int argmax_row(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return static_cast<int>(best);
}

void check_layout(const ModelParams& params, const BlockLayout& layout) {
  if (!(params.layout == layout))
    throw internal_error("ShapeMismatch",
                         "feature layout does not match the model");
}

// Shared by both training entry points.
struct CoreSpec {
  const FeatureSet* train_x = nullptr;
  const std::vector<int>* labels = nullptr;
  const FeatureSet* dev_x = nullptr;
  std::vector<double> dev_true;     // in decode units
  Eigen::VectorXd decode_train;     // distance-term class values
  Eigen::VectorXd decode_dev;       // dev decoding class values
  bool argmax_dev = false;
  LossConfig loss;
};

double decode_value(const Eigen::VectorXd& probs, const Eigen::VectorXd& values,
                    bool argmax) {
  return argmax ? values[argmax_row(probs)] : probs.dot(values);
}

TrainResult train_core(const CoreSpec& spec, const ModelConfig& config) {
  validate(config);
  const Eigen::Index n = spec.train_x->data.rows();
  if (n == 0) throw input_error("EmptyDataset", "no training samples");
  if (static_cast<Eigen::Index>(spec.labels->size()) != n)
    throw input_error("LengthMismatch", "labels do not match training rows");
  for (int label : *spec.labels)
    if (label < 0 || label >= config.k)
      throw input_error("IndexOutOfRange",
                        "label " + std::to_string(label) + " outside 0.." +
                            std::to_string(config.k - 1));
  if (config.epochs > 0 && spec.dev_x->data.rows() == 0)
    throw input_error("EmptyDataset", "no dev samples");
  if (spec.dev_x->data.rows() > 0 &&
      static_cast<Eigen::Index>(spec.dev_true.size()) != spec.dev_x->data.rows())
    throw input_error("LengthMismatch", "dev targets do not match dev rows");

  TrainResult result;
  result.params = init(config, spec.train_x->layout, derive_seed(config.seed, 0));
  if (config.epochs == 0) return result;

  Rng drop_rng(derive_seed(config.seed, 1));
  Rng shuffle_rng(derive_seed(config.seed, 2));

  std::vector<Eigen::MatrixXd> m = zero_like(result.params);
  std::vector<Eigen::MatrixXd> v = zero_like(result.params);
  long step = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  std::vector<Eigen::MatrixXd> best_tensors;
  double best_mae = std::numeric_limits<double>::infinity();

  const int k = config.k;
  const double b1 = config.optim.beta1;
  const double b2 = config.optim.beta2;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;

    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index bsz = std::min<Eigen::Index>(config.batch_size, n - start);
      Eigen::MatrixXd x(bsz, spec.train_x->data.cols());
      for (Eigen::Index j = 0; j < bsz; ++j)
        x.row(j) = spec.train_x->data.row(order[static_cast<std::size_t>(start + j)]);

      ForwardCache cache;
      Eigen::MatrixXd logits =
          forward_batch(result.params, x, true, &drop_rng, &cache);

      Eigen::MatrixXd dlogits(bsz, k);
      double batch_sum = 0.0;
      for (Eigen::Index j = 0; j < bsz; ++j) {
        const int label = (*spec.labels)[static_cast<std::size_t>(
            order[static_cast<std::size_t>(start + j)])];
        const Eigen::VectorXd row = logits.row(j).transpose();
        if (spec.loss.kind == LossConfig::Kind::distance) {
          batch_sum += distance_loss(softmax(row), label, spec.decode_train,
                                     spec.loss.alpha);
          dlogits.row(j) =
              distance_loss_grad(row, label, spec.decode_train, spec.loss.alpha)
                  .transpose() /
              static_cast<double>(bsz);
        } else {
          Eigen::VectorXd probs = softmax(row);
          batch_sum += cross_entropy(probs, label);
          probs[label] -= 1.0;
          dlogits.row(j) = probs.transpose() / static_cast<double>(bsz);
        }
      }
      if (!std::isfinite(batch_sum))
        throw numeric_error("NonFiniteLoss",
                            "epoch " + std::to_string(epoch) + " batch " +
                                std::to_string(start / config.batch_size) +
                                " loss " + std::to_string(batch_sum));
      loss_sum += batch_sum;

      std::vector<Eigen::MatrixXd> grads =
          backward_batch(result.params, cache, dlogits);
      if (config.signal_l2 > 0.0) {
        for (std::size_t t = 0; t < grads.size(); ++t) {
          const std::string& name = result.params.tensor_names[t];
          if (name.rfind("block/signal:", 0) == 0 &&
              name.size() >= 7 && name.compare(name.size() - 7, 7, "/proj_w") == 0)
            grads[t] += config.signal_l2 * result.params.tensors[t];
        }
      }

      ++step;
      const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (std::size_t t = 0; t < grads.size(); ++t) {
        m[t] = b1 * m[t] + (1.0 - b1) * grads[t];
        v[t] = (b2 * v[t].array() + (1.0 - b2) * grads[t].array().square())
                   .matrix();
        result.params.tensors[t].array() -=
            config.optim.learning_rate * (m[t].array() / corr1) /
            ((v[t].array() / corr2).sqrt() + config.optim.epsilon);
      }
    }

    Eigen::MatrixXd dev_logits =
        forward_batch(result.params, spec.dev_x->data, false, nullptr, nullptr);
    double abs_sum = 0.0, sq_sum = 0.0;
    for (Eigen::Index j = 0; j < dev_logits.rows(); ++j) {
      const double pred = decode_value(softmax(dev_logits.row(j).transpose()),
                                       spec.decode_dev, spec.argmax_dev);
      const double diff = pred - spec.dev_true[static_cast<std::size_t>(j)];
      abs_sum += std::abs(diff);
      sq_sum += diff * diff;
    }
    const double dev_n = static_cast<double>(dev_logits.rows());
    const double mae = abs_sum / dev_n;
    result.history.train_loss.push_back(loss_sum / static_cast<double>(n));
    result.history.dev_mae.push_back(mae);
    result.history.dev_rmse.push_back(std::sqrt(sq_sum / dev_n));
    if (mae < best_mae) {
      best_mae = mae;
      best_tensors = result.params.tensors;
      result.history.best_epoch = epoch;
    }
  }

  result.params.tensors = std::move(best_tensors);
  return result;
}

}  // namespace

void validate(const ModelConfig& config) {
  auto fail = [](const std::string& what) {
    throw input_error("InvalidConfig", what);
  };
  if (config.default_proj_dim <= 0) fail("default_proj_dim must be positive");
  for (const auto& [name, dim] : config.proj_dims)
    if (dim <= 0) fail("projection dim for '" + name + "' must be positive");
  if (config.hidden_dims.empty()) fail("at least one hidden layer");
  for (int d : config.hidden_dims)
    if (d <= 0) fail("hidden dims must be positive");
  if (config.k < 2) fail("k must be at least 2");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0))
    fail("dropout must lie in [0, 1)");
  if (config.loss.alpha < 0.0) fail("alpha must be non-negative");
  if (config.optim.learning_rate <= 0.0) fail("learning rate must be positive");
  if (!(config.optim.beta1 >= 0.0 && config.optim.beta1 < 1.0) ||
      !(config.optim.beta2 >= 0.0 && config.optim.beta2 < 1.0))
    fail("betas must lie in [0, 1)");
  if (config.optim.epsilon <= 0.0) fail("epsilon must be positive");
  if (config.batch_size <= 0) fail("batch size must be positive");
  if (config.epochs < 0) fail("epochs must be non-negative");
  if (config.signal_l2 < 0.0) fail("signal_l2 must be non-negative");
  if (config.err_max < 1) fail("err_max must be at least 1");
  if (config.n_min < 0 || config.n_max < config.n_min + 1)
    fail("need 0 <= n_min < n_max");
}

std::string model_config_to_json(const ModelConfig& config) {
  json j;
  j["task"] = config.task == ModelConfig::Task::single ? "single" : "double";
  j["proj_dims"] = json::object();
  for (const auto& [name, dim] : config.proj_dims) j["proj_dims"][name] = dim;
  j["default_proj_dim"] = config.default_proj_dim;
  j["hidden_dims"] = config.hidden_dims;
  j["k"] = config.k;
  j["dropout"] = config.dropout;
  j["loss"] = {{"kind", config.loss.kind == LossConfig::Kind::distance
                            ? "distance"
                            : "cross_entropy"},
               {"alpha", config.loss.alpha}};
  j["optim"] = {{"learning_rate", config.optim.learning_rate},
                {"beta1", config.optim.beta1},
                {"beta2", config.optim.beta2},
                {"epsilon", config.optim.epsilon}};
  j["batch_size"] = config.batch_size;
  j["epochs"] = config.epochs;
  j["seed"] = config.seed;
  j["signal_l2"] = config.signal_l2;
  j["err_max"] = config.err_max;
  j["n_min"] = config.n_min;
  j["n_max"] = config.n_max;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw input_error("ParseError", "model config is not a JSON object");
  ModelConfig config;
  try {
    const std::string task = j.value("task", "single");
    if (task == "single")
      config.task = ModelConfig::Task::single;
    else if (task == "double")
      config.task = ModelConfig::Task::double_task;
    else
      throw input_error("ParseError", "unknown task '" + task + "'");
    if (j.contains("proj_dims"))
      for (const auto& [name, dim] : j["proj_dims"].items())
        config.proj_dims[name] = dim.get<int>();
    config.default_proj_dim = j.value("default_proj_dim", config.default_proj_dim);
    if (j.contains("hidden_dims"))
      config.hidden_dims = j["hidden_dims"].get<std::vector<int>>();
    config.k = j.value("k", config.k);
    config.dropout = j.value("dropout", config.dropout);
    if (j.contains("loss")) {
      const std::string kind = j["loss"].value("kind", "distance");
      if (kind == "distance")
        config.loss.kind = LossConfig::Kind::distance;
      else if (kind == "cross_entropy")
        config.loss.kind = LossConfig::Kind::cross_entropy;
      else
        throw input_error("ParseError", "unknown loss kind '" + kind + "'");
      config.loss.alpha = j["loss"].value("alpha", config.loss.alpha);
    }
    if (j.contains("optim")) {
      const auto& o = j["optim"];
      config.optim.learning_rate =
          o.value("learning_rate", config.optim.learning_rate);
      config.optim.beta1 = o.value("beta1", config.optim.beta1);
      config.optim.beta2 = o.value("beta2", config.optim.beta2);
      config.optim.epsilon = o.value("epsilon", config.optim.epsilon);
    }
    config.batch_size = j.value("batch_size", config.batch_size);
    config.epochs = j.value("epochs", config.epochs);
    config.seed = j.value("seed", config.seed);
    config.signal_l2 = j.value("signal_l2", config.signal_l2);
    config.err_max = j.value("err_max", config.err_max);
    config.n_min = j.value("n_min", config.n_min);
    config.n_max = j.value("n_max", config.n_max);
  } catch (const json::exception& e) {
    throw input_error("ParseError", std::string("model config: ") + e.what());
  }
  return config;
}

ModelParams init(const ModelConfig& config, const BlockLayout& layout,
                 std::uint64_t seed) {
  validate(config);
  if (layout.blocks.empty())
    throw input_error("InvalidConfig", "layout has no feature blocks");

  ModelParams params;
  params.config = config;
  params.layout = layout;

  Rng rng(seed);
  auto add = [&](const std::string& name, Eigen::MatrixXd t) {
    params.tensor_names.push_back(name);
    params.tensors.push_back(std::move(t));
  };

  int concat_dim = 0;
  for (const auto& [name, dim] : layout.blocks) {
    const int p = config.proj_dim(name);
    add("block/" + name + "/proj_w", glorot(p, dim, rng));
    add("block/" + name + "/proj_b", Eigen::MatrixXd::Zero(1, p));
    add("block/" + name + "/norm_gain", Eigen::MatrixXd::Ones(1, p));
    add("block/" + name + "/norm_bias", Eigen::MatrixXd::Zero(1, p));
    concat_dim += p;
  }
  int in = concat_dim;
  for (std::size_t l = 0; l < config.hidden_dims.size(); ++l) {
    const int h = config.hidden_dims[l];
    add("hidden/" + std::to_string(l) + "/w", glorot(h, in, rng));
    add("hidden/" + std::to_string(l) + "/b", Eigen::MatrixXd::Zero(1, h));
    in = h;
  }
  add("out/w", glorot(config.k, in, rng));
  add("out/b", Eigen::MatrixXd::Zero(1, config.k));
  return params;
}

Eigen::MatrixXd forward_batch(const ModelParams& params,
                              const Eigen::MatrixXd& x, bool train_mode,
                              Rng* rng, ForwardCache* cache) {
  const auto& blocks = params.layout.blocks;
  if (x.cols() != params.layout.total_dim())
    throw internal_error("ShapeMismatch",
                         "input has " + std::to_string(x.cols()) +
                             " columns, layout wants " +
                             std::to_string(params.layout.total_dim()));
  const Eigen::Index n = x.rows();

  if (cache) {
    cache->x = x;
    cache->block_norm.clear();
    cache->block_inv_std.clear();
    cache->acts.clear();
    cache->hidden_pre.clear();
    cache->drop_mask.clear();
  }

  int concat_dim = 0;
  for (const auto& [name, dim] : blocks) concat_dim += params.config.proj_dim(name);
  Eigen::MatrixXd concat(n, concat_dim);

  int in_off = 0, out_off = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int d = blocks[b].second;
    const std::size_t base = block_tensor_base(b);
    const Eigen::MatrixXd& w = params.tensors[base];
    const int p = static_cast<int>(w.rows());

    Eigen::MatrixXd z = x.middleCols(in_off, d) * w.transpose();
    z.rowwise() += params.tensors[base + 1].row(0);

    Eigen::VectorXd mu = z.rowwise().mean();
    Eigen::MatrixXd centered = z.colwise() - mu;
    Eigen::VectorXd inv_std =
        (centered.array().square().rowwise().mean() + kNormEpsilon)
            .sqrt()
            .inverse()
            .matrix();
    Eigen::MatrixXd norm =
        (centered.array().colwise() * inv_std.array()).matrix();

    Eigen::MatrixXd y =
        ((norm.array().rowwise() * params.tensors[base + 2].row(0).array())
             .rowwise() +
         params.tensors[base + 3].row(0).array())
            .matrix();
    concat.middleCols(out_off, p) = y;

    if (cache) {
      cache->block_norm.push_back(std::move(norm));
      cache->block_inv_std.push_back(std::move(inv_std));
    }
    in_off += d;
    out_off += p;
  }

  const std::size_t n_hidden = params.config.hidden_dims.size();
  const bool dropping = train_mode && params.config.dropout > 0.0;
  if (dropping && rng == nullptr)
    throw internal_error("MissingRng", "training forward pass needs an rng");
  const double keep = 1.0 - params.config.dropout;

  Eigen::MatrixXd act = concat;
  if (cache) cache->acts.push_back(concat);

  for (std::size_t l = 0; l < n_hidden; ++l) {
    const std::size_t base = hidden_tensor_base(blocks.size(), l);
    Eigen::MatrixXd pre = act * params.tensors[base].transpose();
    pre.rowwise() += params.tensors[base + 1].row(0);
    act = pre.cwiseMax(0.0);
    if (dropping) {
      Eigen::MatrixXd mask(pre.rows(), pre.cols());
      for (Eigen::Index r = 0; r < mask.rows(); ++r)
        for (Eigen::Index c = 0; c < mask.cols(); ++c)
          mask(r, c) = rng->uniform() < keep ? 1.0 / keep : 0.0;
      act = act.cwiseProduct(mask);
      if (cache) cache->drop_mask.push_back(std::move(mask));
    }
    if (cache) {
      cache->hidden_pre.push_back(std::move(pre));
      cache->acts.push_back(act);
    }
  }

  const std::size_t ob = output_tensor_base(blocks.size(), n_hidden);
  Eigen::MatrixXd logits = act * params.tensors[ob].transpose();
  logits.rowwise() += params.tensors[ob + 1].row(0);
  if (cache) cache->logits = logits;
  return logits;
}

Eigen::VectorXd forward_one(const ModelParams& params, const Eigen::VectorXd& x) {
  return forward_batch(params, x.transpose(), false, nullptr, nullptr)
      .row(0)
      .transpose();
}

std::vector<Eigen::MatrixXd> zero_like(const ModelParams& params) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(params.tensors.size());
  for (const auto& t : params.tensors)
    out.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
  return out;
}

std::vector<Eigen::MatrixXd> backward_batch(const ModelParams& params,
                                            const ForwardCache& cache,
                                            const Eigen::MatrixXd& dlogits) {
  const auto& blocks = params.layout.blocks;
  const std::size_t n_hidden = params.config.hidden_dims.size();
  std::vector<Eigen::MatrixXd> grads = zero_like(params);

  const std::size_t ob = output_tensor_base(blocks.size(), n_hidden);
  grads[ob] = dlogits.transpose() * cache.acts.back();
  grads[ob + 1] = dlogits.colwise().sum();
  Eigen::MatrixXd da = dlogits * params.tensors[ob];

  for (std::size_t l = n_hidden; l-- > 0;) {
    if (!cache.drop_mask.empty()) da = da.cwiseProduct(cache.drop_mask[l]);
    Eigen::MatrixXd dpre =
        da.cwiseProduct((cache.hidden_pre[l].array() > 0.0)
                            .cast<double>()
                            .matrix());
    const std::size_t base = hidden_tensor_base(blocks.size(), l);
    grads[base] = dpre.transpose() * cache.acts[l];
    grads[base + 1] = dpre.colwise().sum();
    da = dpre * params.tensors[base];
  }

  int in_off = 0, out_off = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int d = blocks[b].second;
    const std::size_t base = block_tensor_base(b);
    const int p = static_cast<int>(params.tensors[base].rows());

    Eigen::ArrayXXd dy = da.middleCols(out_off, p).array();
    const Eigen::ArrayXXd& xhat = cache.block_norm[b].array();

    grads[base + 2] = (dy * xhat).colwise().sum().matrix();
    grads[base + 3] = dy.colwise().sum().matrix();

    Eigen::ArrayXXd dxhat =
        dy.rowwise() * params.tensors[base + 2].row(0).array();
    Eigen::ArrayXd m1 = dxhat.rowwise().mean();
    Eigen::ArrayXd m2 = (dxhat * xhat).rowwise().mean();
    Eigen::MatrixXd dz = (((dxhat.colwise() - m1) - xhat.colwise() * m2)
                              .colwise() *
                          cache.block_inv_std[b].array())
                             .matrix();

    grads[base] = dz.transpose() * cache.x.middleCols(in_off, d);
    grads[base + 1] = dz.colwise().sum();

    in_off += d;
    out_off += p;
  }
  return grads;
}

double batch_loss(const ModelParams& params, const Eigen::MatrixXd& x,
                  const std::vector<int>& labels, const Eigen::VectorXd& decode,
                  const LossConfig& loss) {
  Eigen::MatrixXd logits = forward_batch(params, x, false, nullptr, nullptr);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    const Eigen::VectorXd probs = softmax(logits.row(j).transpose());
    const int label = labels[static_cast<std::size_t>(j)];
    sum += loss.kind == LossConfig::Kind::distance
               ? distance_loss(probs, label, decode, loss.alpha)
               : cross_entropy(probs, label);
  }
  return sum / static_cast<double>(logits.rows());
}

std::vector<Eigen::MatrixXd> batch_loss_gradients(
    const ModelParams& params, const Eigen::MatrixXd& x,
    const std::vector<int>& labels, const Eigen::VectorXd& decode,
    const LossConfig& loss, double* loss_out) {
  ForwardCache cache;
  Eigen::MatrixXd logits = forward_batch(params, x, false, nullptr, &cache);
  const Eigen::Index n = logits.rows();
  Eigen::MatrixXd dlogits(n, logits.cols());
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd row = logits.row(j).transpose();
    const int label = labels[static_cast<std::size_t>(j)];
    if (loss.kind == LossConfig::Kind::distance) {
      sum += distance_loss(softmax(row), label, decode, loss.alpha);
      dlogits.row(j) = distance_loss_grad(row, label, decode, loss.alpha)
                           .transpose() /
                       static_cast<double>(n);
    } else {
      Eigen::VectorXd probs = softmax(row);
      sum += cross_entropy(probs, label);
      probs[label] -= 1.0;
      dlogits.row(j) = probs.transpose() / static_cast<double>(n);
    }
  }
  if (loss_out) *loss_out = sum / static_cast<double>(n);
  return backward_batch(params, cache, dlogits);
}

TrainResult train_single(const FeatureSet& train_x,
                         const std::vector<int>& train_labels,
                         const FeatureSet& dev_x,
                         const std::vector<double>& dev_wer,
                         const ClassMap& map, const ModelConfig& config) {
  if (map.k() < 2) throw input_error("InvalidConfig", "class map needs k >= 2");
  ModelConfig c = config;
  c.k = map.k();
  c.task = ModelConfig::Task::single;

  CoreSpec spec;
  spec.train_x = &train_x;
  spec.labels = &train_labels;
  spec.dev_x = &dev_x;
  spec.dev_true = dev_wer;
  spec.decode_train = percent_vector(map.wer_fixed) / 100.0;
  spec.decode_dev = percent_vector(map.wer_fixed);
  spec.argmax_dev = false;
  spec.loss = c.loss;

  TrainResult result = train_core(spec, c);
  result.params.class_map = map;
  return result;
}

DoubleTrainResult train_double(const FeatureSet& train_x,
                               const std::vector<int>& train_err,
                               const std::vector<int>& train_n,
                               const FeatureSet& dev_x,
                               const std::vector<int>& dev_err,
                               const std::vector<int>& dev_n,
                               const ModelConfig& config) {
  validate(config);
  auto run_head = [&](const std::vector<int>& train_counts,
                      const std::vector<int>& dev_counts, int lo, int hi,
                      std::uint64_t stream) {
    std::vector<double> ladder;
    for (int c = lo; c <= hi; ++c) ladder.push_back(static_cast<double>(c));

    std::vector<int> labels;
    labels.reserve(train_counts.size());
    for (int c : train_counts) labels.push_back(std::clamp(c, lo, hi) - lo);

    ModelConfig hc = config;
    hc.k = hi - lo + 1;
    hc.task = ModelConfig::Task::double_task;
    hc.loss.kind = LossConfig::Kind::cross_entropy;
    hc.seed = derive_seed(config.seed, stream);

    CoreSpec spec;
    spec.train_x = &train_x;
    spec.labels = &labels;
    spec.dev_x = &dev_x;
    spec.dev_true.assign(dev_counts.begin(), dev_counts.end());
    spec.decode_dev = percent_vector(ladder);
    spec.argmax_dev = true;
    spec.loss = hc.loss;

    TrainResult r = train_core(spec, hc);
    r.params.ladder = ladder;
    return r;
  };

  TrainResult err = run_head(train_err, dev_err, 0, config.err_max, 10);
  TrainResult n = run_head(train_n, dev_n, config.n_min, config.n_max, 11);
  return DoubleTrainResult{std::move(err.params), std::move(n.params),
                           std::move(err.history), std::move(n.history)};
}

Prediction predict_single(const ModelParams& params, const FeatureVector& fv) {
  check_layout(params, fv.layout);
  if (params.class_map.k() == 0)
    throw internal_error("ShapeMismatch", "model carries no class map");
  Prediction pred;
  pred.probs = softmax(forward_one(params, fv.values));
  pred.expected_wer =
      expected_wer(pred.probs, percent_vector(params.class_map.wer_fixed));
  pred.argmax_class = argmax_row(pred.probs);
  return pred;
}

std::vector<Prediction> predict_single_batch(const ModelParams& params,
                                             const FeatureSet& set) {
  check_layout(params, set.layout);
  if (params.class_map.k() == 0)
    throw internal_error("ShapeMismatch", "model carries no class map");
  const Eigen::VectorXd values = percent_vector(params.class_map.wer_fixed);
  Eigen::MatrixXd logits = forward_batch(params, set.data, false, nullptr, nullptr);
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    Prediction pred;
    pred.probs = softmax(logits.row(j).transpose());
    pred.expected_wer = expected_wer(pred.probs, values);
    pred.argmax_class = argmax_row(pred.probs);
    out.push_back(std::move(pred));
  }
  return out;
}

int predict_count(const ModelParams& head, const FeatureVector& fv) {
  check_layout(head, fv.layout);
  if (head.ladder.empty())
    throw internal_error("ShapeMismatch", "model carries no count ladder");
  Eigen::VectorXd probs = softmax(forward_one(head, fv.values));
  return static_cast<int>(head.ladder[static_cast<std::size_t>(argmax_row(probs))]);
}

double predict_double(const ModelParams& err_params, const ModelParams& n_params,
                      const FeatureVector& fv) {
  const int err = predict_count(err_params, fv);
  const int n = std::max(predict_count(n_params, fv), 1);
  return 100.0 * static_cast<double>(err) / static_cast<double>(n);
}

std::vector<double> predict_double_batch(const ModelParams& err_params,
                                         const ModelParams& n_params,
                                         const FeatureSet& set) {
  check_layout(err_params, set.layout);
  check_layout(n_params, set.layout);
  if (err_params.ladder.empty() || n_params.ladder.empty())
    throw internal_error("ShapeMismatch", "model carries no count ladder");
  Eigen::MatrixXd err_logits =
      forward_batch(err_params, set.data, false, nullptr, nullptr);
  Eigen::MatrixXd n_logits =
      forward_batch(n_params, set.data, false, nullptr, nullptr);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(set.data.rows()));
  for (Eigen::Index j = 0; j < set.data.rows(); ++j) {
    const int err = static_cast<int>(err_params.ladder[static_cast<std::size_t>(
        argmax_row(softmax(err_logits.row(j).transpose())))]);
    const int n = std::max(
        static_cast<int>(n_params.ladder[static_cast<std::size_t>(
            argmax_row(softmax(n_logits.row(j).transpose())))]),
        1);
    out.push_back(100.0 * static_cast<double>(err) / static_cast<double>(n));
  }
  return out;
}

}  // namespace ewer
