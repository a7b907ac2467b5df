#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ewer/binning.hpp"
#include "ewer/checkpoint.hpp"
#include "ewer/dataset.hpp"
#include "ewer/errors.hpp"
#include "ewer/eval.hpp"
#include "ewer/features.hpp"
#include "ewer/model.hpp"
#include "ewer/synthgen.hpp"
#include "ewer/util.hpp"
#include "ewer/wer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

#ifndef EWER_VERSION
#define EWER_VERSION "0.0.0"
#endif

json default_config() {
  json config;
  config["data"] = {{"train", ""}, {"dev", ""}, {"test", ""}};
  config["normalizer"] = {{"lowercase", true}, {"strip_chars", ""}};
  config["features"] = {{"numerical", true},
                        {"text", true},
                        {"signal_mfcc", false},
                        {"signal_melspec", false},
                        {"signal_rawsig", false},
                        {"embedding", ""},
                        {"allow_missing_audio", false},
                        {"workers", 1}};
  config["binning"] = {{"kind", "balanced"},
                       {"k", 15},
                       {"fixed_values", json::array({0, 25, 50, 75, 100, 150})}};
  config["model"] = json::parse(ewer::model_config_to_json(ewer::ModelConfig{}));
  config["eval"] = {{"seeds", json::array({1, 2, 3, 4, 5})},
                    {"bins", 10},
                    {"name", "model"}};
  config["sweep"] = {{"alphas", json::array({0, 10, 25, 50, 100})},
                     {"ks", json::array({5, 10, 15})},
                     {"workers", 1}};
  config["synth"] = {{"n_utterances", 1000},
                     {"min_len", 2},
                     {"max_len", 40},
                     {"vocab_size", 500},
                     {"shape", "skewed_left"},
                     {"beta_a", 1.0},
                     {"beta_b", 3.8819},
                     {"scale", 150.0},
                     {"uniform_lo", 0.0},
                     {"uniform_hi", 100.0},
                     {"mode1_mean", 10.0},
                     {"mode1_sd", 8.0},
                     {"mode2_mean", 80.0},
                     {"mode2_sd", 10.0},
                     {"mode1_weight", 0.5},
                     {"seed", 1},
                     {"sec_per_token", 0.3657},
                     {"duration_noise", 0.05},
                     {"subs_only", false},
                     {"split", json::array({0.8, 0.1, 0.1})}};
  config["output_dir"] = "out";
  return config;
}

// --a.b.c=value tokens left over after flag parsing. Values parse as JSON
// when they can, otherwise they stay strings.
void apply_override(json& config, const std::string& token) {
  if (token.rfind("--", 0) != 0)
    throw ewer::input_error("InvalidFlag", "unrecognized argument '" + token +
                                               "', expected --path=value");
  const std::size_t eq = token.find('=');
  if (eq == std::string::npos || eq == 2)
    throw ewer::input_error("InvalidFlag",
                            "override '" + token + "' needs --path=value form");
  const std::string path = token.substr(2, eq - 2);
  const std::string raw = token.substr(eq + 1);

  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty())
      throw ewer::input_error("InvalidFlag", "bad override path '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

ewer::NormalizerConfig normalizer_from(const json& config) {
  ewer::NormalizerConfig n;
  n.lowercase = config.at("normalizer").value("lowercase", true);
  n.strip_chars = config.at("normalizer").value("strip_chars", "");
  return n;
}

ewer::FeatureConfig feature_config_from(const json& config) {
  const json& f = config.at("features");
  ewer::FeatureConfig fc;
  fc.numerical = f.value("numerical", true);
  fc.text = f.value("text", true);
  fc.signal_mfcc = f.value("signal_mfcc", false);
  fc.signal_melspec = f.value("signal_melspec", false);
  fc.signal_rawsig = f.value("signal_rawsig", false);
  fc.embedding_path = f.value("embedding", "");
  fc.allow_missing_audio = f.value("allow_missing_audio", false);
  return fc;
}

ewer::GenConfig gen_config_from(const json& config) {
  const json& s = config.at("synth");
  ewer::GenConfig g;
  g.n_utterances = s.value("n_utterances", g.n_utterances);
  g.min_len = s.value("min_len", g.min_len);
  g.max_len = s.value("max_len", g.max_len);
  g.vocab_size = s.value("vocab_size", g.vocab_size);
  const std::string shape = s.value("shape", "skewed_left");
  if (shape == "skewed_left")
    g.shape = ewer::GenConfig::Shape::skewed_left;
  else if (shape == "uniform")
    g.shape = ewer::GenConfig::Shape::uniform;
  else if (shape == "bimodal")
    g.shape = ewer::GenConfig::Shape::bimodal;
  else
    throw ewer::input_error("InvalidConfig", "unknown shape '" + shape + "'");
  g.beta_a = s.value("beta_a", g.beta_a);
  g.beta_b = s.value("beta_b", g.beta_b);
  g.scale = s.value("scale", g.scale);
  g.uniform_lo = s.value("uniform_lo", g.uniform_lo);
  g.uniform_hi = s.value("uniform_hi", g.uniform_hi);
  g.mode1_mean = s.value("mode1_mean", g.mode1_mean);
  g.mode1_sd = s.value("mode1_sd", g.mode1_sd);
  g.mode2_mean = s.value("mode2_mean", g.mode2_mean);
  g.mode2_sd = s.value("mode2_sd", g.mode2_sd);
  g.mode1_weight = s.value("mode1_weight", g.mode1_weight);
  g.seed = s.value("seed", g.seed);
  g.sec_per_token = s.value("sec_per_token", g.sec_per_token);
  g.duration_noise = s.value("duration_noise", g.duration_noise);
  g.subs_only = s.value("subs_only", g.subs_only);
  return g;
}

ewer::ModelConfig model_config_from(const json& config) {
  return ewer::model_config_from_json(config.at("model").dump());
}

std::string data_path(const json& config, const std::string& split) {
  return config.at("data").value(split, "");
}

fs::path output_dir(const json& config) {
  fs::path dir = config.value("output_dir", "out");
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const json& config, std::uint64_t seed) {
  json manifest;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", ewer::crc32_str(config.dump()));
  manifest["command"] = command;
  manifest["config_crc32"] = buf;
  manifest["seed"] = seed;
  manifest["version"] = EWER_VERSION;
  ewer::write_file((dir / "run-manifest.json").string(), manifest.dump() + "\n");
}

ewer::Corpus load_split(const json& config, const std::string& split) {
  const std::string path = data_path(config, split);
  if (path.empty())
    throw ewer::input_error("MissingPath", "config data." + split + " is not set");
  ewer::Corpus corpus = ewer::load_corpus(path, normalizer_from(config));
  if (corpus.empty())
    throw ewer::input_error("EmptyCorpus", path + " holds no utterances");
  return corpus;
}

struct ScoredCorpus {
  std::vector<ewer::AlignmentResult> alignments;
  std::vector<double> wers;  // percent; degenerate utterances rejected
};

ScoredCorpus score_strict(const ewer::Corpus& corpus) {
  ScoredCorpus scored;
  scored.alignments.reserve(corpus.size());
  scored.wers.reserve(corpus.size());
  for (const ewer::Utterance& u : corpus) {
    scored.alignments.push_back(ewer::align(u.reference, u.hypothesis));
    if (scored.alignments.back().degenerate())
      throw ewer::input_error("DegenerateUtterance",
                              "utterance '" + u.id + "' has an empty reference");
    scored.wers.push_back(ewer::wer(scored.alignments.back()));
  }
  return scored;
}

std::vector<std::pair<std::string, double>> id_wer_pairs(
    const ewer::Corpus& corpus, const ScoredCorpus& scored) {
  std::vector<std::pair<std::string, double>> pairs;
  pairs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    pairs.emplace_back(corpus[i].id, scored.wers[i]);
  return pairs;
}

ewer::ClassMap load_classmap(const fs::path& dir) {
  return ewer::classmap_from_json(
      ewer::read_file((dir / "classmap.json").string()));
}

ewer::FeatureSet load_cache(const fs::path& dir, const std::string& split) {
  return ewer::load_features(
      (dir / ("features_" + split + ".ewerfeat")).string());
}

void check_ids(const ewer::FeatureSet& set, const ewer::Corpus& corpus,
               const std::string& split) {
  if (set.ids.size() != corpus.size())
    throw ewer::input_error("IdMismatch",
                            split + " feature cache has " +
                                std::to_string(set.ids.size()) +
                                " rows, corpus has " +
                                std::to_string(corpus.size()));
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (set.ids[i] != corpus[i].id)
      throw ewer::input_error("IdMismatch",
                              split + " row " + std::to_string(i) + " is '" +
                                  set.ids[i] + "', corpus has '" +
                                  corpus[i].id + "'");
}

// Minimal reader for this toolkit's own CSV output: no quoting, '.' decimals.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

CsvTable read_csv(const std::string& path) {
  std::istringstream in(ewer::read_file(path));
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

double parse_double(const std::string& cell, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ewer::input_error("ParseError", what + ": bad number '" + cell + "'");
  }
}

// ---------------------------------------------------------------- commands

int cmd_score(const json& config, const std::string& input) {
  const fs::path dir = output_dir(config);
  ewer::Corpus corpus = ewer::load_corpus(input, normalizer_from(config));
  if (corpus.empty())
    throw ewer::input_error("EmptyCorpus", input + " holds no utterances");

  std::vector<ewer::AlignmentResult> alignments;
  alignments.reserve(corpus.size());
  ewer::CsvWriter csv((dir / "score.csv").string(),
                      {"id", "err", "n", "i", "d", "s", "wer"});
  for (const ewer::Utterance& u : corpus) {
    const ewer::AlignmentResult a = ewer::align(u.reference, u.hypothesis);
    alignments.push_back(a);
    csv.row({u.id, std::to_string(a.err()), std::to_string(a.n_ref),
             std::to_string(a.insertions), std::to_string(a.deletions),
             std::to_string(a.substitutions),
             a.degenerate() ? "nan" : ewer::fmt_double(ewer::wer(a))});
  }
  csv.close();

  const ewer::CorpusWer total = ewer::corpus_wer(alignments);
  std::cout << "corpus WER " << ewer::fmt_double(total.wer) << " ("
            << total.total_err << " errors / " << total.total_ref
            << " reference words";
  if (total.degenerate > 0)
    std::cout << ", " << total.degenerate << " degenerate excluded";
  std::cout << ")\n";
  write_manifest(dir, "score", config, 0);
  return 0;
}

int cmd_bin(const json& config) {
  const fs::path dir = output_dir(config);
  ewer::Corpus train = load_split(config, "train");
  const ScoredCorpus scored = score_strict(train);

  const json& b = config.at("binning");
  const std::string kind = b.value("kind", "balanced");
  ewer::ClassMap map;
  std::vector<int> train_labels;
  if (kind == "balanced") {
    const int k = b.value("k", 15);
    map = ewer::build_balanced(scored.wers, k);
    train_labels = ewer::assign_training(id_wer_pairs(train, scored), k);
  } else if (kind == "fixed") {
    const std::vector<double> values =
        b.value("fixed_values", ewer::fixed_default_values());
    map = ewer::build_fixed(values);
    train_labels.reserve(train.size());
    for (double w : scored.wers) train_labels.push_back(ewer::assign(map, w));
  } else {
    throw ewer::input_error("InvalidConfig", "unknown binning kind '" + kind + "'");
  }

  ewer::write_file((dir / "classmap.json").string(),
                   ewer::classmap_to_json(map) + "\n");

  ewer::CsvWriter csv((dir / "labels.csv").string(),
                      {"id", "split", "wer", "label"});
  for (std::size_t i = 0; i < train.size(); ++i)
    csv.row({train[i].id, "train", ewer::fmt_double(scored.wers[i]),
             std::to_string(train_labels[i])});
  for (const std::string split : {"dev", "test"}) {
    const std::string path = data_path(config, split);
    if (path.empty() || !fs::exists(path)) {
      std::cout << "split " << split << " absent, labels skipped\n";
      continue;
    }
    ewer::Corpus corpus = load_split(config, split);
    const ScoredCorpus s = score_strict(corpus);
    for (std::size_t i = 0; i < corpus.size(); ++i)
      csv.row({corpus[i].id, split, ewer::fmt_double(s.wers[i]),
               std::to_string(ewer::assign(map, s.wers[i]))});
  }
  csv.close();

  std::cout << "class map (" << kind << ", k=" << map.k() << ") written\n";
  write_manifest(dir, "bin", config, 0);
  return 0;
}

int cmd_featurize(const json& config, int workers_flag, bool allow_missing_flag) {
  const fs::path dir = output_dir(config);
  ewer::FeatureConfig fc = feature_config_from(config);
  if (allow_missing_flag) fc.allow_missing_audio = true;

  int workers = config.at("features").value("workers", 1);
  if (workers_flag > 0) workers = workers_flag;

  ewer::Corpus train = load_split(config, "train");
  std::optional<ewer::Vocab> vocab;
  if (fc.text) vocab = ewer::build_vocab(train);

  const bool allow = fc.allow_missing_audio;
  fc.allow_missing_audio = true;  // collect the full list, enforce below
  auto run = [&](const std::string& split, const ewer::Corpus& corpus) {
    ewer::FeaturizeResult result = ewer::featurize_corpus(
        corpus, fc, vocab ? &*vocab : nullptr, workers);
    if (!result.missing_audio.empty()) {
      for (const std::string& id : result.missing_audio)
        std::cerr << "missing audio: " << id << "\n";
      if (!allow)
        throw ewer::input_error(
            "MissingAudio", std::to_string(result.missing_audio.size()) +
                                " utterances in " + split +
                                " lack usable audio (rerun with --allow-missing"
                                " to zero-fill)");
    }
    const fs::path path = dir / ("features_" + split + ".ewerfeat");
    ewer::save_features(result.set, path.string());
    std::cout << split << ": " << result.set.ids.size() << " rows, "
              << result.set.layout.total_dim() << " dims [";
    for (std::size_t i = 0; i < result.set.layout.blocks.size(); ++i) {
      if (i) std::cout << ' ';
      std::cout << result.set.layout.blocks[i].first << '('
                << result.set.layout.blocks[i].second << ')';
    }
    std::cout << "]\n";
  };

  run("train", train);
  for (const std::string split : {"dev", "test"}) {
    const std::string path = data_path(config, split);
    if (path.empty() || !fs::exists(path)) {
      std::cout << "split " << split << " absent, skipped\n";
      continue;
    }
    run(split, load_split(config, split));
  }
  write_manifest(dir, "featurize", config, 0);
  return 0;
}

void write_history(const ewer::TrainHistory& history, const std::string& path) {
  ewer::CsvWriter csv(path, {"epoch", "train_loss", "dev_mae", "dev_rmse"});
  for (std::size_t e = 0; e < history.train_loss.size(); ++e)
    csv.row({std::to_string(e), ewer::fmt_double(history.train_loss[e]),
             ewer::fmt_double(history.dev_mae[e]),
             ewer::fmt_double(history.dev_rmse[e])});
  csv.close();
}

int cmd_train(const json& config) {
  const fs::path dir = output_dir(config);
  ewer::Corpus train = load_split(config, "train");
  ewer::Corpus dev = load_split(config, "dev");
  ewer::FeatureSet train_x = load_cache(dir, "train");
  ewer::FeatureSet dev_x = load_cache(dir, "dev");
  check_ids(train_x, train, "train");
  check_ids(dev_x, dev, "dev");

  const ScoredCorpus train_scored = score_strict(train);
  const ScoredCorpus dev_scored = score_strict(dev);
  const ewer::ModelConfig mc = model_config_from(config);

  if (mc.task == ewer::ModelConfig::Task::single) {
    const ewer::ClassMap map = load_classmap(dir);
    std::vector<int> labels;
    if (map.kind == ewer::ClassMap::Kind::balanced) {
      labels = ewer::assign_training(id_wer_pairs(train, train_scored), map.k());
    } else {
      labels.reserve(train.size());
      for (double w : train_scored.wers)
        labels.push_back(ewer::assign(map, w));
    }
    ewer::TrainResult result = ewer::train_single(
        train_x, labels, dev_x, dev_scored.wers, map, mc);
    ewer::save_model(result.params, (dir / "model.ewermodl").string());
    write_history(result.history, (dir / "history.csv").string());
    std::cout << "single task trained, best epoch "
              << result.history.best_epoch << ", dev MAE "
              << (result.history.best_epoch >= 0
                      ? ewer::fmt_double(
                            result.history.dev_mae[static_cast<std::size_t>(
                                result.history.best_epoch)])
                      : "n/a")
              << "\n";
  } else {
    auto counts = [](const ScoredCorpus& s) {
      std::pair<std::vector<int>, std::vector<int>> out;
      for (const ewer::AlignmentResult& a : s.alignments) {
        out.first.push_back(static_cast<int>(a.err()));
        out.second.push_back(static_cast<int>(a.n_ref));
      }
      return out;
    };
    auto [train_err, train_n] = counts(train_scored);
    auto [dev_err, dev_n] = counts(dev_scored);
    ewer::DoubleTrainResult result = ewer::train_double(
        train_x, train_err, train_n, dev_x, dev_err, dev_n, mc);
    ewer::save_double_model(result.err, result.n,
                            (dir / "model.ewermodl").string());
    write_history(result.err_history, (dir / "history_err.csv").string());
    write_history(result.n_history, (dir / "history_n.csv").string());
    std::cout << "double task trained, best epochs err="
              << result.err_history.best_epoch
              << " n=" << result.n_history.best_epoch << "\n";
  }
  write_manifest(dir, "train", config, mc.seed);
  return 0;
}

int cmd_predict(const json& config, std::string model_path,
                std::string features_path) {
  const fs::path dir = output_dir(config);
  if (model_path.empty()) model_path = (dir / "model.ewermodl").string();
  if (features_path.empty())
    features_path = (dir / "features_test.ewerfeat").string();

  const ewer::FeatureSet set = ewer::load_features(features_path);
  const ewer::ModelConfig::Task task = ewer::checkpoint_task(model_path);

  if (task == ewer::ModelConfig::Task::single) {
    const ewer::ModelParams params = ewer::load_model(model_path);
    const std::vector<ewer::Prediction> preds =
        ewer::predict_single_batch(params, set);
    std::vector<std::string> header{"id", "expected_wer", "argmax_class"};
    for (int c = 0; c < params.class_map.k(); ++c)
      header.push_back("p" + std::to_string(c));
    ewer::CsvWriter csv((dir / "predictions.csv").string(), header);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      std::vector<std::string> cells{set.ids[i],
                                     ewer::fmt_double(preds[i].expected_wer),
                                     std::to_string(preds[i].argmax_class)};
      for (int c = 0; c < params.class_map.k(); ++c)
        cells.push_back(ewer::fmt_double(preds[i].probs[c]));
      csv.row(cells);
    }
    csv.close();
    std::cout << preds.size() << " predictions written\n";
  } else {
    const auto [err_params, n_params] = ewer::load_double_model(model_path);
    ewer::CsvWriter csv((dir / "predictions.csv").string(),
                        {"id", "expected_wer", "err_est", "n_est"});
    for (std::size_t i = 0; i < set.ids.size(); ++i) {
      const ewer::FeatureVector fv = set.row(static_cast<Eigen::Index>(i));
      const int err = ewer::predict_count(err_params, fv);
      const int n = std::max(ewer::predict_count(n_params, fv), 1);
      csv.row({set.ids[i], ewer::fmt_double(100.0 * err / n),
               std::to_string(err), std::to_string(n)});
    }
    csv.close();
    std::cout << set.ids.size() << " predictions written\n";
  }
  write_manifest(dir, "predict", config, 0);
  return 0;
}

int cmd_eval(const json& config, std::string predictions_path) {
  const fs::path dir = output_dir(config);
  if (predictions_path.empty())
    predictions_path = (dir / "predictions.csv").string();

  const CsvTable table = read_csv(predictions_path);
  const int id_col = table.column("id");
  const int wer_col = table.column("expected_wer");
  if (id_col < 0 || wer_col < 0)
    throw ewer::input_error("ParseError",
                            predictions_path + ": need id and expected_wer");
  const int argmax_col = table.column("argmax_class");

  ewer::Corpus test = load_split(config, "test");
  const ScoredCorpus scored = score_strict(test);
  std::unordered_map<std::string, double> true_wer;
  for (std::size_t i = 0; i < test.size(); ++i)
    true_wer[test[i].id] = scored.wers[i];

  const ewer::ClassMap map = load_classmap(dir);
  std::vector<double> pred, truth;
  std::vector<int> pred_class, true_class;
  for (const auto& row : table.rows) {
    const std::string& id = row[static_cast<std::size_t>(id_col)];
    const auto it = true_wer.find(id);
    if (it == true_wer.end())
      throw ewer::input_error("MissingId",
                              "prediction id '" + id + "' not in test split");
    const double p =
        parse_double(row[static_cast<std::size_t>(wer_col)], predictions_path);
    pred.push_back(p);
    truth.push_back(it->second);
    pred_class.push_back(argmax_col >= 0
                             ? static_cast<int>(parse_double(
                                   row[static_cast<std::size_t>(argmax_col)],
                                   predictions_path))
                             : ewer::assign(map, p));
    true_class.push_back(ewer::assign(map, it->second));
  }

  const int bins = config.at("eval").value("bins", 10);
  const ewer::EvalReport report =
      ewer::evaluate(pred, truth, pred_class, true_class, map.k(), bins);
  const std::string name = config.at("eval").value("name", "model");
  ewer::write_report_csv(report, name, (dir / "report.csv").string());
  ewer::write_confusion_csv(report.confusion, (dir / "confusion.csv").string());
  ewer::write_curve_csv(report.curve, (dir / "curve.csv").string());
  std::cout << "MAE " << ewer::fmt_double(report.mae) << " RMSE "
            << ewer::fmt_double(report.rmse) << " over " << report.n
            << " samples\n";
  write_manifest(dir, "eval", config, 0);
  return 0;
}

int cmd_sweep(const json& config, const std::string& param, int workers_flag) {
  const fs::path dir = output_dir(config);
  ewer::Corpus train = load_split(config, "train");
  ewer::Corpus dev = load_split(config, "dev");
  ewer::Corpus test = load_split(config, "test");
  ewer::FeatureSet train_x = load_cache(dir, "train");
  ewer::FeatureSet dev_x = load_cache(dir, "dev");
  ewer::FeatureSet test_x = load_cache(dir, "test");
  check_ids(train_x, train, "train");
  check_ids(dev_x, dev, "dev");
  check_ids(test_x, test, "test");

  const ScoredCorpus train_scored = score_strict(train);
  ewer::SweepData data;
  data.train_x = &train_x;
  data.train_wer = id_wer_pairs(train, train_scored);
  data.dev_x = &dev_x;
  data.dev_wer = score_strict(dev).wers;
  data.test_x = &test_x;
  data.test_wer = score_strict(test).wers;

  ewer::ModelConfig mc = model_config_from(config);
  mc.k = config.at("binning").value("k", 15);

  std::vector<std::uint64_t> seeds;
  for (const auto& s : config.at("eval").at("seeds"))
    seeds.push_back(s.get<std::uint64_t>());
  int workers = config.at("sweep").value("workers", 1);
  if (workers_flag > 0) workers = workers_flag;

  std::vector<ewer::SweepRow> rows;
  if (param == "alpha") {
    std::vector<double> alphas;
    for (const auto& a : config.at("sweep").at("alphas"))
      alphas.push_back(a.get<double>());
    rows = ewer::sweep_alpha(data, mc, alphas, seeds, workers);
  } else if (param == "k") {
    std::vector<int> ks;
    for (const auto& k : config.at("sweep").at("ks"))
      ks.push_back(k.get<int>());
    rows = ewer::sweep_k(data, mc, ks, seeds, workers);
  } else {
    throw ewer::input_error("InvalidConfig",
                            "sweep --param must be alpha or k, got '" + param +
                                "'");
  }

  ewer::write_sweep_csv(rows, (dir / "sweep.csv").string());
  std::cout << rows.size() << " sweep rows written\n";
  write_manifest(dir, "sweep", config, mc.seed);
  return 0;
}

int cmd_synth(const json& config) {
  const fs::path dir = output_dir(config);
  const ewer::GenConfig gc = gen_config_from(config);
  const json& split_spec = config.at("synth").at("split");
  if (!split_spec.is_array() || split_spec.size() != 3)
    throw ewer::input_error("InvalidConfig", "synth.split needs 3 fractions");
  double fractions[3];
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    fractions[i] = split_spec[static_cast<std::size_t>(i)].get<double>();
    if (fractions[i] < 0.0)
      throw ewer::input_error("InvalidConfig", "split fractions must be >= 0");
    sum += fractions[i];
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ewer::input_error("InvalidConfig", "split fractions must sum to 1");

  const ewer::GenResult result = ewer::generate(gc);
  const std::size_t n = result.corpus.size();
  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const std::size_t n_dev = std::min(
      static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n))),
      n - n_train);

  struct Split {
    std::string name;
    std::size_t begin, end;
  };
  const Split splits[3] = {{"train", 0, n_train},
                           {"dev", n_train, n_train + n_dev},
                           {"test", n_train + n_dev, n}};
  for (const Split& s : splits) {
    if (s.begin >= s.end) {
      std::cout << "split " << s.name << " empty, not written\n";
      continue;
    }
    ewer::Corpus part(result.corpus.begin() + static_cast<long>(s.begin),
                      result.corpus.begin() + static_cast<long>(s.end));
    std::vector<ewer::InjectedEdits> part_truth(
        result.truth.begin() + static_cast<long>(s.begin),
        result.truth.begin() + static_cast<long>(s.end));
    ewer::save_corpus(part, (dir / (s.name + ".jsonl")).string());
    ewer::save_truth(part_truth,
                     (dir / ("truth_" + s.name + ".jsonl")).string());
    std::cout << s.name << ": " << part.size() << " utterances\n";
  }

  const ewer::CorpusStats stats = ewer::describe(result.corpus);
  std::cout << "corpus WER " << ewer::fmt_double(stats.corpus_wer)
            << ", mean length " << ewer::fmt_double(stats.mean_length)
            << ", mean err " << ewer::fmt_double(stats.mean_err)
            << ", mean duration " << ewer::fmt_double(stats.mean_duration)
            << "\n";
  write_manifest(dir, "synth", config, gc.seed);
  return 0;
}

void report_error(const ewer::Error& e, bool as_json) {
  if (as_json) {
    json out;
    const char* category = e.category() == ewer::ErrorCategory::input
                               ? "input"
                               : e.category() == ewer::ErrorCategory::numeric
                                     ? "numeric"
                                     : "internal";
    out["error"] = {{"category", category},
                    {"code", e.code()},
                    {"message", e.what()}};
    std::cerr << out.dump() << "\n";
  } else {
    std::cerr << "error: " << e.what() << "\n";
  }
}

int exit_code(const ewer::Error& e) {
  switch (e.category()) {
    case ewer::ErrorCategory::input: return 2;
    case ewer::ErrorCategory::numeric: return 3;
    case ewer::ErrorCategory::internal: return 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WER estimation toolkit: scoring, balanced WER classes, "
               "feature pipelines, classifier training, and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  bool json_errors = false;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_flag("--json", json_errors, "machine-readable errors on stderr");
    sub->allow_extras();
    return sub;
  };

  CLI::App* score = common(app.add_subcommand(
      "score", "Exact WER per utterance plus the pooled corpus WER"));
  std::string score_input;
  score->add_option("--input", score_input, "corpus JSONL to score")
      ->required();

  common(app.add_subcommand(
      "bin", "Build the WER class map from the training split"));
  CLI::App* featurize = common(app.add_subcommand(
      "featurize", "Extract feature blocks into binary caches"));
  int workers_flag = 0;
  bool allow_missing = false;
  featurize->add_option("--workers", workers_flag, "parallel extraction");
  featurize->add_flag("--allow-missing", allow_missing,
                      "zero-fill signal blocks when audio is missing");

  common(app.add_subcommand("train", "Train the configured estimator"));
  CLI::App* predict = common(
      app.add_subcommand("predict", "Decode WER estimates for a feature cache"));
  std::string model_path, features_path;
  predict->add_option("--model", model_path, "checkpoint path");
  predict->add_option("--features", features_path, "feature cache path");

  CLI::App* eval_cmd = common(app.add_subcommand(
      "eval", "Score predictions: MAE/RMSE, confusion, binned curve"));
  std::string predictions_path;
  eval_cmd->add_option("--predictions", predictions_path, "predictions.csv path");

  CLI::App* sweep = common(app.add_subcommand(
      "sweep", "Multi-seed hyperparameter sweep (alpha or k)"));
  std::string sweep_param;
  int sweep_workers = 0;
  sweep->add_option("--param", sweep_param, "alpha or k")->required();
  sweep->add_option("--workers", sweep_workers, "parallel training cells");

  common(app.add_subcommand(
      "synth", "Generate a synthetic corpus with exact error structure"));

  CLI11_PARSE(app, argc, argv);

  try {
    json config = default_config();
    if (!config_path.empty()) {
      json user = json::parse(ewer::read_file(config_path), nullptr, false);
      if (user.is_discarded() || !user.is_object())
        throw ewer::input_error("ParseError",
                                config_path + " is not a JSON object");
      config.merge_patch(user);
    }
    CLI::App* sub = app.get_subcommands().front();
    std::vector<std::string> extras = sub->remaining();
    for (const std::string& token : extras) apply_override(config, token);

    const std::string name = sub->get_name();
    if (name == "score") return cmd_score(config, score_input);
    if (name == "bin") return cmd_bin(config);
    if (name == "featurize")
      return cmd_featurize(config, workers_flag, allow_missing);
    if (name == "train") return cmd_train(config);
    if (name == "predict") return cmd_predict(config, model_path, features_path);
    if (name == "eval") return cmd_eval(config, predictions_path);
    if (name == "sweep") return cmd_sweep(config, sweep_param, sweep_workers);
    if (name == "synth") return cmd_synth(config);
    throw ewer::internal_error("UnknownCommand", name);
  } catch (const ewer::Error& e) {
    report_error(e, json_errors);
    return exit_code(e);
  } catch (const std::exception& e) {
    if (json_errors) {
      json out;
      out["error"] = {{"category", "internal"},
                      {"code", "Unhandled"},
                      {"message", e.what()}};
      std::cerr << out.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  }
}
