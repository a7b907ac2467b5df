#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ewer/errors.hpp"
#include "ewer/rng.hpp"
#include "ewer/wer.hpp"
#include "fixtures.hpp"

using ewer::align;
using ewer::AlignmentResult;
using ewer::normalize;

namespace {

using Tokens = std::vector<std::string>;

// Exhaustive minimum edit distance, the independent oracle for the DP.
long brute_force(const Tokens& ref, const Tokens& hyp, std::size_t i,
                 std::size_t j) {
  if (i == ref.size()) return static_cast<long>(hyp.size() - j);
  if (j == hyp.size()) return static_cast<long>(ref.size() - i);
  long best = brute_force(ref, hyp, i + 1, j + 1) + (ref[i] == hyp[j] ? 0 : 1);
  best = std::min(best, brute_force(ref, hyp, i + 1, j) + 1);
  best = std::min(best, brute_force(ref, hyp, i, j + 1) + 1);
  return best;
}

Tokens random_tokens(ewer::Rng& rng, std::size_t max_len,
                     std::size_t vocab) {
  Tokens out(rng.uniform_int(max_len + 1));
  for (auto& t : out) t = "t" + std::to_string(rng.uniform_int(vocab));
  return out;
}

}  // namespace

TEST_CASE("normalize lowercases, strips declared characters, splits") {
  CHECK(normalize("HeLLo  World") == Tokens{"hello", "world"});
  CHECK(normalize("") == Tokens{});
  CHECK(normalize("  \t ") == Tokens{});
  CHECK(normalize("don't stop") == Tokens{"don't", "stop"});

  ewer::NormalizerConfig keep_case;
  keep_case.lowercase = false;
  CHECK(normalize("Keep Case", keep_case) == Tokens{"Keep", "Case"});

  ewer::NormalizerConfig strip;
  strip.strip_chars = ".,!";
  CHECK(normalize("stop, now!", strip) == Tokens{"stop", "now"});
  // Stripping can fuse nothing: removed characters just vanish.
  CHECK(normalize("a.b", strip) == Tokens{"ab"});
}

TEST_CASE("golden transcript pairs reproduce their known WER") {
  for (const auto& pair : fixtures::transcript_pairs()) {
    const Tokens ref = normalize(pair.reference);
    const Tokens hyp = normalize(pair.hypothesis);
    const AlignmentResult a = align(ref, hyp);
    CHECK(std::abs(ewer::wer(a) - pair.wer) <= 0.1);
  }
}

TEST_CASE("hand-checked alignments") {
  SUBCASE("identical sequences") {
    const Tokens t{"a", "b", "c"};
    const AlignmentResult a = align(t, t);
    CHECK(a.err() == 0);
    CHECK(a.correct == 3);
    CHECK(a.n_ref == 3);
    CHECK(ewer::wer(a) == 0.0);
  }
  SUBCASE("empty hypothesis is all deletions") {
    const AlignmentResult a = align(Tokens{"a", "b"}, Tokens{});
    CHECK(a.deletions == 2);
    CHECK(a.insertions == 0);
    CHECK(a.substitutions == 0);
    CHECK(ewer::wer(a) == 100.0);
  }
  SUBCASE("single substitution") {
    const AlignmentResult a = align(Tokens{"a", "b", "c"}, Tokens{"a", "x", "c"});
    CHECK(a.substitutions == 1);
    CHECK(a.err() == 1);
    CHECK(a.correct == 2);
  }
  SUBCASE("single insertion") {
    const AlignmentResult a = align(Tokens{"a", "b"}, Tokens{"a", "x", "b"});
    CHECK(a.insertions == 1);
    CHECK(a.err() == 1);
  }
  SUBCASE("wer above 100 percent") {
    const AlignmentResult a = align(Tokens{"a"}, Tokens{"x", "y", "z"});
    CHECK(a.err() == 3);
    CHECK(ewer::wer(a) == 300.0);
  }
  SUBCASE("counts for the numeral pair") {
    const AlignmentResult a =
        align(normalize("seventeen twenty four"), normalize("1724"));
    CHECK(a.err() == 3);
    CHECK(a.n_ref == 3);
    CHECK(a.substitutions == 1);
    CHECK(a.deletions == 2);
  }
}

TEST_CASE("tie break prefers substitution over paired insert/delete") {
  // Swapped tokens admit several minimum-cost paths; the deterministic
  // backtrace must pick two substitutions.
  const AlignmentResult a = align(Tokens{"a", "b"}, Tokens{"b", "a"});
  CHECK(a.err() == 2);
  CHECK(a.substitutions == 2);
  CHECK(a.insertions == 0);
  CHECK(a.deletions == 0);
  CHECK(a.correct == 0);
}

TEST_CASE("empty reference handling") {
  CHECK_THROWS_AS(align(Tokens{}, Tokens{"a"}), ewer::Error);
  try {
    align(Tokens{}, Tokens{"a"});
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "EmptyReference");
  }

  const AlignmentResult both_empty = align(Tokens{}, Tokens{});
  CHECK(both_empty.degenerate());
  CHECK_THROWS_AS(ewer::wer(both_empty), ewer::Error);
  try {
    ewer::wer(both_empty);
  } catch (const ewer::Error& e) {
    CHECK(e.code() == "DegenerateUtterance");
  }
}

TEST_CASE("dp matches the exhaustive oracle on random pairs") {
  ewer::Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    Tokens ref = random_tokens(rng, 6, 4);
    Tokens hyp = random_tokens(rng, 6, 4);
    if (ref.empty() && !hyp.empty()) ref.push_back("t0");
    const AlignmentResult a = align(ref, hyp);
    if (ref.empty() && hyp.empty()) {
      CHECK(a.degenerate());
      continue;
    }
    CHECK(a.err() == brute_force(ref, hyp, 0, 0));
    CHECK(a.correct + a.substitutions + a.deletions ==
          static_cast<long>(ref.size()));
    CHECK(a.correct + a.substitutions + a.insertions ==
          static_cast<long>(hyp.size()));
  }
}

TEST_CASE("error count is symmetric and D minus I tracks the length gap") {
  ewer::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Tokens ref = random_tokens(rng, 8, 5);
    Tokens hyp = random_tokens(rng, 8, 5);
    if (ref.empty()) ref.push_back("t0");
    if (hyp.empty()) hyp.push_back("t1");
    const AlignmentResult fwd = align(ref, hyp);
    const AlignmentResult rev = align(hyp, ref);
    CHECK(fwd.err() == rev.err());
    CHECK(fwd.deletions - fwd.insertions ==
          static_cast<long>(ref.size()) - static_cast<long>(hyp.size()));
  }
}

TEST_CASE("corpus wer pools error and reference counts") {
  std::vector<AlignmentResult> alignments;
  alignments.push_back(align(Tokens{"a", "b"}, Tokens{"a", "x"}));   // 1/2
  alignments.push_back(align(Tokens{"a", "b", "c", "d"},
                             Tokens{"x", "y", "z", "d"}));           // 3/4
  const ewer::CorpusWer total = ewer::corpus_wer(alignments);
  CHECK(total.total_err == 4);
  CHECK(total.total_ref == 6);
  CHECK(total.wer == doctest::Approx(100.0 * 4 / 6));
  CHECK(total.degenerate == 0);

  alignments.push_back(align(Tokens{}, Tokens{}));
  const ewer::CorpusWer with_degenerate = ewer::corpus_wer(alignments);
  CHECK(with_degenerate.degenerate == 1);
  CHECK(with_degenerate.total_ref == 6);

  CHECK_THROWS_AS(ewer::corpus_wer(std::vector<AlignmentResult>{}),
                  ewer::Error);
}
