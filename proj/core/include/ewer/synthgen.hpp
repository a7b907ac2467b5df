#ifndef EWER_SYNTHGEN_HPP_
#define EWER_SYNTHGEN_HPP_

#include <cstdint>
#include <vector>

#include "ewer/dataset.hpp"

namespace ewer {

// Synthetic corpus settings. References are random vocabulary tokens
// ("w<i>"); edits introduce fresh tokens ("e<j>") that never collide with
// the reference, so the injected edit count is an exact upper bound on the
// edit distance, and exact in substitution-only mode.
struct GenConfig {
  enum class Shape { skewed_left, uniform, bimodal };

  int n_utterances = 1000;
  int min_len = 2;
  int max_len = 40;
  int vocab_size = 500;

  Shape shape = Shape::skewed_left;
  // skewed_left: Beta(beta_a, beta_b) scaled to [0, scale]; the defaults
  // put about 70% of the mass below 40.
  double beta_a = 1.0;
  double beta_b = 3.8819;
  double scale = 150.0;
  // uniform: flat on [uniform_lo, uniform_hi].
  double uniform_lo = 0.0;
  double uniform_hi = 100.0;
  // bimodal: two-component normal mixture, clamped to [0, scale].
  double mode1_mean = 10.0;
  double mode1_sd = 8.0;
  double mode2_mean = 80.0;
  double mode2_sd = 10.0;
  double mode1_weight = 0.5;

  std::uint64_t seed = 1;

  // duration = tokens * sec_per_token + N(0, duration_noise), >= 0.1 s.
  double sec_per_token = 0.3657;
  double duration_noise = 0.05;

  // true: substitutions only, realized error count equals the injected
  // count; false: mixed I/D/S, injected count is an upper bound.
  bool subs_only = false;
};

void validate(const GenConfig& config);  // throws InvalidConfig

struct GenResult {
  Corpus corpus;
  std::vector<InjectedEdits> truth;  // aligned with corpus order
};

// Pure function of the config: each utterance derives its own seed from
// (config.seed, index). Edits touch at most one original token position
// each, so at most length edits are injected per utterance.
GenResult generate(const GenConfig& config);

struct CorpusStats {
  double mean_err = 0.0;       // mean per-utterance edit count (recomputed)
  double mean_duration = 0.0;  // seconds
  double mean_length = 0.0;    // reference tokens
  double corpus_wer = 0.0;     // percent, pooled
};

CorpusStats describe(const Corpus& corpus);  // throws EmptyCorpus

}  // namespace ewer

#endif  // EWER_SYNTHGEN_HPP_
