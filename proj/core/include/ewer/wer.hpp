#ifndef EWER_WER_HPP_
#define EWER_WER_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ewer {

struct NormalizerConfig {
  bool lowercase = true;
  // Characters removed from the text before splitting. Empty by default:
  // punctuation stays part of its token.
  std::string strip_chars;
};

// Lowercases (ASCII), optionally strips a declared character set, then
// splits on runs of whitespace. Empty input yields an empty sequence.
std::vector<std::string> normalize(std::string_view text,
                                   const NormalizerConfig& config = {});

struct AlignmentResult {
  long insertions = 0;
  long deletions = 0;
  long substitutions = 0;
  long correct = 0;
  long n_ref = 0;

  long err() const { return insertions + deletions + substitutions; }
  bool degenerate() const { return n_ref == 0; }
};

// Minimum-cost alignment with unit insertion/deletion/substitution costs.
// The backtrace is deterministic: ties prefer substitution, then deletion,
// then insertion. Throws EmptyReference if the reference is empty while the
// hypothesis is not; two empty sequences yield the degenerate all-zero
// result.
AlignmentResult align(std::span<const std::string> reference,
                      std::span<const std::string> hypothesis);

// WER in percent; values above 100 are legal. Throws DegenerateUtterance
// when n_ref == 0.
double wer(const AlignmentResult& a);

struct CorpusWer {
  double wer = 0.0;        // percent, total errors over total reference words
  long total_err = 0;
  long total_ref = 0;
  long degenerate = 0;     // utterances excluded for n_ref == 0
};

CorpusWer corpus_wer(std::span<const AlignmentResult> alignments);

}  // namespace ewer

#endif  // EWER_WER_HPP_
