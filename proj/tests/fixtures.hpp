#ifndef EWER_TESTS_FIXTURES_HPP_
#define EWER_TESTS_FIXTURES_HPP_

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "ewer/dataset.hpp"
#include "ewer/rng.hpp"
#include "ewer/signal.hpp"

namespace fixtures {

// Reference/hypothesis pairs with independently verified WER values, used
// by both the unit suite and the acceptance suite.
struct TranscriptPair {
  const char* reference;
  const char* hypothesis;
  double wer;  // percent
};

inline const std::vector<TranscriptPair>& transcript_pairs() {
  static const std::vector<TranscriptPair> pairs{
      {"one historian says that an event was produced by napoleon's power "
       "another that it was produced by alexander's",
       "when is dorian says that an event was produced by napoleon's power "
       "another that it was produced by alexander's",
       16.7},
      {"rynch watched dispassionately before he caught the needler jerking "
       "it away from the prisoner the man eyed him steadily and his "
       "expression did not alter even when rynch swung the off world weapon "
       "to center its sights on the late owner",
       "wrench watch dispassionately before he caught a kneeler jerking it "
       "away from the prisoner the man i can steadily and his expression did "
       "not alter even when wrench swampy off world weapon to center its "
       "sights on the late owner",
       21.9},
      {"of acting a father's part to augustine until he was fairly launched "
       "in life he had a child of his own",
       "acting a father's part 2 augustine until he was fairly launched in "
       "life",
       42.8},
      {"supported by an honorable name how could she extricate herself from "
       "this labyrinth to whom would she apply to help her out of this "
       "painful situation debray to whom she had run with the first instinct "
       "of a woman towards the man she loves and who yet betrays her",
       "supported by an honorable name how could you extricate herself in "
       "this labyrinth to whom would she apply to help her out of this "
       "painful situation dubray to whom should run the first instinct of a "
       "woman towards the man she loves and who yep betrays her",
       14.3},
      {"seventeen twenty four", "1724", 100.0},
      {"saint james's seven", "st james 7", 100.0},
      {"mamma says i am never within", "mama says i am never with him", 50.0},
  };
  return pairs;
}

// Self-cleaning scratch directory under the system temp root.
class TempDir {
public:
  explicit TempDir(const std::string& prefix) {
    static std::atomic<unsigned> counter{0};
    const unsigned n = counter.fetch_add(1);
    path_ = std::filesystem::temp_directory_path() /
            (prefix + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(n));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

private:
  std::filesystem::path path_;
};

// Deterministic broadband test signal: a few sine partials plus seeded
// noise, safely inside [-1, 1] even after amplitude doubling.
inline ewer::Pcm make_test_tone(double seconds, int rate,
                                double amplitude = 0.3,
                                std::uint64_t seed = 99) {
  ewer::Pcm pcm;
  pcm.rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  pcm.samples.resize(n);
  ewer::Rng rng(seed);
  const double partials[] = {220.0, 554.4, 1318.5, 2960.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    double v = 0.0;
    for (double f : partials) v += std::sin(2.0 * M_PI * f * t);
    v = v / 4.0 + 0.25 * (2.0 * rng.uniform() - 1.0);
    pcm.samples[i] = amplitude * v;
  }
  return pcm;
}

inline ewer::Utterance make_utterance(const std::string& id,
                                      std::vector<std::string> reference,
                                      std::vector<std::string> hypothesis,
                                      double duration = 1.0) {
  ewer::Utterance u;
  u.id = id;
  u.reference = std::move(reference);
  u.hypothesis = std::move(hypothesis);
  u.duration = duration;
  return u;
}

}  // namespace fixtures

#endif  // EWER_TESTS_FIXTURES_HPP_
