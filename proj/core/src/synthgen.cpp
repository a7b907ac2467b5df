#include "ewer/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ewer/errors.hpp"
#include "ewer/rng.hpp"
#include "ewer/wer.hpp"

namespace ewer {

namespace {

double draw_target_wer(const GenConfig& config, Rng& rng) {
  switch (config.shape) {
    case GenConfig::Shape::skewed_left:
      return rng.beta(config.beta_a, config.beta_b) * config.scale;
    case GenConfig::Shape::uniform:
      return rng.uniform(config.uniform_lo, config.uniform_hi);
    case GenConfig::Shape::bimodal: {
      const double w = rng.uniform() < config.mode1_weight
                           ? rng.normal(config.mode1_mean, config.mode1_sd)
                           : rng.normal(config.mode2_mean, config.mode2_sd);
      return std::clamp(w, 0.0, config.scale);
    }
  }
  return 0.0;
}

enum class Edit : int { none, substitute, remove, insert };

}  // namespace

void validate(const GenConfig& config) {
  auto fail = [](const std::string& what) {
    throw input_error("InvalidConfig", what);
  };
  if (config.n_utterances < 1) fail("n_utterances must be positive");
  if (config.min_len < 2) fail("min_len must be at least 2");
  if (config.max_len < config.min_len) fail("max_len must be >= min_len");
  if (config.vocab_size < 1) fail("vocab_size must be positive");
  if (config.beta_a <= 0.0 || config.beta_b <= 0.0)
    fail("beta shape parameters must be positive");
  if (config.scale <= 0.0) fail("scale must be positive");
  if (config.uniform_lo < 0.0 || config.uniform_hi < config.uniform_lo)
    fail("need 0 <= uniform_lo <= uniform_hi");
  if (config.mode1_sd < 0.0 || config.mode2_sd < 0.0)
    fail("mixture stddevs must be non-negative");
  if (!(config.mode1_weight >= 0.0 && config.mode1_weight <= 1.0))
    fail("mode1_weight must lie in [0, 1]");
  if (config.sec_per_token <= 0.0) fail("sec_per_token must be positive");
  if (config.duration_noise < 0.0) fail("duration_noise must be non-negative");
}

GenResult generate(const GenConfig& config) {
  validate(config);
  GenResult result;
  result.corpus.reserve(static_cast<std::size_t>(config.n_utterances));
  result.truth.reserve(static_cast<std::size_t>(config.n_utterances));

  for (int index = 0; index < config.n_utterances; ++index) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(index)));

    const int len =
        config.min_len +
        static_cast<int>(rng.uniform_int(
            static_cast<std::uint64_t>(config.max_len - config.min_len + 1)));

    Utterance u;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "synth-%06d", index);
    u.id = buf;
    u.reference.reserve(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
      std::snprintf(buf, sizeof(buf), "w%llu",
                    static_cast<unsigned long long>(rng.uniform_int(
                        static_cast<std::uint64_t>(config.vocab_size))));
      u.reference.emplace_back(buf);
    }

    const double target = draw_target_wer(config, rng);
    const int e = std::min(
        static_cast<int>(std::lround(target * len / 100.0)), len);

    // e distinct original positions, then an edit kind per position.
    std::vector<int> positions(static_cast<std::size_t>(len));
    for (int p = 0; p < len; ++p) positions[static_cast<std::size_t>(p)] = p;
    for (int i = 0; i < e; ++i) {
      const int j = i + static_cast<int>(rng.uniform_int(
                            static_cast<std::uint64_t>(len - i)));
      std::swap(positions[static_cast<std::size_t>(i)],
                positions[static_cast<std::size_t>(j)]);
    }
    std::vector<Edit> edits(static_cast<std::size_t>(len), Edit::none);
    for (int i = 0; i < e; ++i) {
      Edit kind = Edit::substitute;
      if (!config.subs_only) {
        switch (rng.uniform_int(3)) {
          case 0: kind = Edit::substitute; break;
          case 1: kind = Edit::remove; break;
          default: kind = Edit::insert; break;
        }
      }
      edits[static_cast<std::size_t>(positions[static_cast<std::size_t>(i)])] =
          kind;
    }

    InjectedEdits truth;
    truth.id = u.id;
    int fresh = 0;
    auto fresh_token = [&] {
      std::snprintf(buf, sizeof(buf), "e%d", fresh++);
      return std::string(buf);
    };
    for (int p = 0; p < len; ++p) {
      switch (edits[static_cast<std::size_t>(p)]) {
        case Edit::none:
          u.hypothesis.push_back(u.reference[static_cast<std::size_t>(p)]);
          break;
        case Edit::substitute:
          u.hypothesis.push_back(fresh_token());
          ++truth.substitutions;
          break;
        case Edit::remove:
          ++truth.deletions;
          break;
        case Edit::insert:
          u.hypothesis.push_back(fresh_token());
          u.hypothesis.push_back(u.reference[static_cast<std::size_t>(p)]);
          ++truth.insertions;
          break;
      }
    }

    u.duration = std::max(
        len * config.sec_per_token + rng.normal(0.0, config.duration_noise),
        0.1);

    result.corpus.push_back(std::move(u));
    result.truth.push_back(std::move(truth));
  }
  return result;
}

CorpusStats describe(const Corpus& corpus) {
  if (corpus.empty()) throw input_error("EmptyCorpus", "no utterances");
  CorpusStats stats;
  std::vector<AlignmentResult> alignments;
  alignments.reserve(corpus.size());
  for (const Utterance& u : corpus) {
    alignments.push_back(align(u.reference, u.hypothesis));
    stats.mean_err += static_cast<double>(alignments.back().err());
    stats.mean_duration += u.duration;
    stats.mean_length += static_cast<double>(u.reference.size());
  }
  const double n = static_cast<double>(corpus.size());
  stats.mean_err /= n;
  stats.mean_duration /= n;
  stats.mean_length /= n;
  stats.corpus_wer = corpus_wer(alignments).wer;
  return stats;
}

}  // namespace ewer
