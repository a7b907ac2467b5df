#include <benchmark/benchmark.h>

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ewer/binning.hpp"
#include "ewer/features.hpp"
#include "ewer/model.hpp"
#include "ewer/rng.hpp"
#include "ewer/signal.hpp"
#include "ewer/wer.hpp"

namespace {

std::vector<std::string> random_tokens(ewer::Rng& rng, int n, int vocab) {
  std::vector<std::string> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back("w" + std::to_string(rng.uniform_int(vocab)));
  return out;
}

void BM_Align30(benchmark::State& state) {
  ewer::Rng rng(1);
  const std::vector<std::string> ref = random_tokens(rng, 30, 50);
  std::vector<std::string> hyp = ref;
  for (int i = 0; i < 8; ++i)
    hyp[rng.uniform_int(hyp.size())] = "x" + std::to_string(i);
  hyp.erase(hyp.begin() + 3);
  for (auto _ : state) {
    const ewer::AlignmentResult a = ewer::align(ref, hyp);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_Align30);

std::vector<double> tone_15s(int rate) {
  std::vector<double> samples(static_cast<std::size_t>(15.0 * rate));
  ewer::Rng rng(2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    samples[i] = 0.3 * std::sin(2.0 * 3.14159265358979323846 * 440.0 * t) +
                 0.05 * (rng.uniform() - 0.5);
  }
  return samples;
}

void BM_MelSpectrogram15s(benchmark::State& state) {
  const std::vector<double> samples = tone_15s(16000);
  for (auto _ : state) {
    const ewer::SignalMatrix m = ewer::mel_spectrogram(samples, 16000);
    benchmark::DoNotOptimize(m.data.data());
  }
}
BENCHMARK(BM_MelSpectrogram15s);

void BM_Mfcc15s(benchmark::State& state) {
  const std::vector<double> samples = tone_15s(16000);
  for (auto _ : state) {
    const ewer::SignalMatrix m = ewer::mfcc(samples, 16000);
    benchmark::DoNotOptimize(m.data.data());
  }
}
BENCHMARK(BM_Mfcc15s);

void BM_BuildBalanced28k(benchmark::State& state) {
  ewer::Rng rng(3);
  std::vector<double> wers(28000);
  for (double& w : wers) w = rng.uniform() * 150.0;
  for (auto _ : state) {
    const ewer::ClassMap map = ewer::build_balanced(wers, 15);
    benchmark::DoNotOptimize(map.wer_fixed.data());
  }
}
BENCHMARK(BM_BuildBalanced28k);

struct NetFixture {
  ewer::ModelParams params;
  Eigen::MatrixXd x;
  std::vector<int> labels;
  Eigen::VectorXd decode;
  ewer::LossConfig loss;

  NetFixture() {
    ewer::ModelConfig mc;  // hidden {64,32}
    mc.k = 15;
    ewer::BlockLayout layout;
    layout.blocks = {{"numerical", 3}, {"text", 600}};
    params = ewer::init(mc, layout, 4);
    ewer::Rng rng(5);
    x.resize(32, layout.total_dim());
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rng.normal();
    for (int i = 0; i < 32; ++i)
      labels.push_back(static_cast<int>(rng.uniform_int(15)));
    decode.resize(15);
    for (int c = 0; c < 15; ++c) decode[c] = 0.1 * c;
    loss.kind = ewer::LossConfig::Kind::distance;
    loss.alpha = 50.0;
  }
};

void BM_ForwardBatch32(benchmark::State& state) {
  const NetFixture f;
  for (auto _ : state) {
    const Eigen::MatrixXd logits =
        ewer::forward_batch(f.params, f.x, false, nullptr, nullptr);
    benchmark::DoNotOptimize(logits.data());
  }
}
BENCHMARK(BM_ForwardBatch32);

void BM_LossGradientsBatch32(benchmark::State& state) {
  const NetFixture f;
  for (auto _ : state) {
    double loss = 0.0;
    const std::vector<Eigen::MatrixXd> grads = ewer::batch_loss_gradients(
        f.params, f.x, f.labels, f.decode, f.loss, &loss);
    benchmark::DoNotOptimize(grads.data());
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_LossGradientsBatch32);

}  // namespace

BENCHMARK_MAIN();
