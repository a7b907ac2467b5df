#ifndef EWER_FEATURES_HPP_
#define EWER_FEATURES_HPP_

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "ewer/dataset.hpp"

namespace ewer {

// Ordered named blocks; every sample in a dataset shares one layout.
struct BlockLayout {
  std::vector<std::pair<std::string, int>> blocks;  // (name, dim)

  int total_dim() const;
  int offset_of(const std::string& name) const;  // -1 when absent
  int dim_of(const std::string& name) const;     // -1 when absent
  bool operator==(const BlockLayout&) const = default;
};

struct FeatureVector {
  BlockLayout layout;
  Eigen::VectorXd values;
};

// Feature matrix for a whole split, one row per utterance, id-aligned.
struct FeatureSet {
  BlockLayout layout;
  std::vector<std::string> ids;
  Eigen::MatrixXd data;

  FeatureVector row(Eigen::Index i) const {
    return FeatureVector{layout, data.row(i).transpose()};
  }
};

// Word / grapheme-monogram / grapheme-bigram index maps, built from the
// training split only: indices in first-seen order over id-sorted data.
// Each sub-block reserves one out-of-vocabulary bucket at its end.
struct Vocab {
  std::unordered_map<std::string, int> words;
  std::unordered_map<std::string, int> monograms;
  std::unordered_map<std::string, int> bigrams;

  int text_dim() const {
    return static_cast<int>(words.size() + monograms.size() + bigrams.size()) +
           3;
  }
};

Vocab build_vocab(const Corpus& train);

// [word_count, grapheme_count, duration]: hypothesis token count,
// non-whitespace character count of the hypothesis, duration in seconds.
Eigen::Vector3d numerical_features(const Utterance& u);

// Concatenated counts: word unigrams, grapheme monograms, within-token
// grapheme bigrams, each with a trailing OOV bucket.
Eigen::VectorXd text_features(std::span<const std::string> hypothesis,
                              const Vocab& vocab);

struct EmbeddingTable {
  int dim = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors;
  long duplicate_ids = 0;  // later occurrences win; a warning is printed
};

// Text format: header "EWER-EMB v1 <dim>", then "<id> <v1> ... <vdim>" per
// line. Throws DimensionMismatch on ragged rows.
EmbeddingTable load_embeddings(const std::string& path);

struct FeatureConfig {
  bool numerical = true;
  bool text = true;
  bool signal_mfcc = false;
  bool signal_melspec = false;
  bool signal_rawsig = false;
  std::string embedding_path;       // empty disables the embedding block
  bool allow_missing_audio = false; // zero-fill signal blocks when audio is absent
};

struct FeaturizeResult {
  FeatureSet set;
  std::vector<std::string> missing_audio;  // utterance ids, in corpus order
};

// Assembles the configured blocks for every utterance. vocab is required
// when config.text is set. Extraction is pure per sample; workers > 1
// parallelizes over samples with output order unchanged.
FeaturizeResult featurize_corpus(const Corpus& corpus,
                                 const FeatureConfig& config,
                                 const Vocab* vocab, int workers = 1);

// Binary cache: magic "EWERFEAT", version byte, block name/dim table, row
// id table, then row-major 64-bit little-endian floats.
void save_features(const FeatureSet& set, const std::string& path);
FeatureSet load_features(const std::string& path);

}  // namespace ewer

#endif  // EWER_FEATURES_HPP_
