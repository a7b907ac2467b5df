#ifndef EWER_DATASET_HPP_
#define EWER_DATASET_HPP_

#include <string>
#include <vector>

#include "ewer/wer.hpp"

namespace ewer {

struct Utterance {
  std::string id;
  std::vector<std::string> reference;
  std::vector<std::string> hypothesis;
  double duration = 0.0;    // seconds
  std::string audio_path;   // empty when no audio is attached
};

using Corpus = std::vector<Utterance>;

// JSONL, one object per line: {"id", "reference", "hypothesis", "duration",
// "audio"?}. Unknown fields are ignored. Transcripts are tokenized with the
// given normalizer on load. Throws on malformed lines (with the line
// number), duplicate ids, or negative durations.
Corpus load_corpus(const std::string& path,
                   const NormalizerConfig& normalizer = {});

void save_corpus(const Corpus& corpus, const std::string& path);

struct InjectedEdits {
  std::string id;
  long insertions = 0;
  long deletions = 0;
  long substitutions = 0;

  long total() const { return insertions + deletions + substitutions; }
};

// Sidecar truth file: JSONL {"id", "injected_i", "injected_d", "injected_s"}.
std::vector<InjectedEdits> load_truth(const std::string& path);
void save_truth(const std::vector<InjectedEdits>& truth,
                const std::string& path);

}  // namespace ewer

#endif  // EWER_DATASET_HPP_
