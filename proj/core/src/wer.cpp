#include "ewer/wer.hpp"

#include <algorithm>
#include <cctype>

#include "ewer/errors.hpp"
#include "ewer/util.hpp"

namespace ewer {

std::vector<std::string> normalize(std::string_view text,
                                   const NormalizerConfig& config) {
  std::string work;
  work.reserve(text.size());
  for (char ch : text) {
    if (!config.strip_chars.empty() &&
        config.strip_chars.find(ch) != std::string::npos)
      continue;
    if (config.lowercase)
      ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    work.push_back(ch);
  }
  return split_whitespace(work);
}

AlignmentResult align(std::span<const std::string> reference,
                      std::span<const std::string> hypothesis) {
  const std::size_t n = reference.size();
  const std::size_t m = hypothesis.size();
  if (n == 0 && m == 0) return AlignmentResult{};
  if (n == 0)
    throw input_error("EmptyReference",
                      "WER is undefined for an empty reference");

  // Full (n+1) x (m+1) table; utterances are short so memory is a non-issue
  // and the backtrace needs the whole table anyway.
  std::vector<long> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> long& {
    return d[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      long sub_cost = reference[i - 1] == hypothesis[j - 1] ? 0 : 1;
      at(i, j) = std::min({at(i - 1, j - 1) + sub_cost, at(i - 1, j) + 1,
                           at(i, j - 1) + 1});
    }
  }

  AlignmentResult r;
  r.n_ref = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] &&
        at(i, j) == at(i - 1, j - 1)) {
      ++r.correct;
      --i;
      --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      ++r.substitutions;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++r.deletions;
      --i;
    } else {
      ++r.insertions;
      --j;
    }
  }
  return r;
}

double wer(const AlignmentResult& a) {
  if (a.n_ref == 0)
    throw input_error("DegenerateUtterance",
                      "WER is undefined when the reference has no words");
  return 100.0 * static_cast<double>(a.err()) / static_cast<double>(a.n_ref);
}

CorpusWer corpus_wer(std::span<const AlignmentResult> alignments) {
  CorpusWer out;
  for (const auto& a : alignments) {
    if (a.degenerate()) {
      ++out.degenerate;
      continue;
    }
    out.total_err += a.err();
    out.total_ref += a.n_ref;
  }
  if (out.total_ref == 0)
    throw input_error("EmptyCorpus",
                      "no utterance with a non-empty reference");
  out.wer = 100.0 * static_cast<double>(out.total_err) /
            static_cast<double>(out.total_ref);
  return out;
}

}  // namespace ewer
