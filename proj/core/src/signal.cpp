#include "ewer/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <unsupported/Eigen/FFT>

#include "ewer/errors.hpp"
#include "ewer/util.hpp"

namespace ewer {

namespace {

constexpr int kFrameLen = 200;   // 25 ms at 8 kHz
constexpr int kFrameStep = 80;   // 10 ms
constexpr int kNfft = 256;
constexpr int kNumBins = kNfft / 2 + 1;
constexpr double kLogFloor = 1e-10;
constexpr int kMelBands = 96;
constexpr int kMfccBank = 26;
constexpr int kMfccCoeffs = 13;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) {
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

std::uint32_t rd_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}
std::uint16_t rd_u16(const char* p) {
  std::uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

std::vector<double> resample_linear(const std::vector<double>& in, int rate,
                                    int target) {
  if (rate == target) return in;
  const double ratio = static_cast<double>(rate) / target;
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(in.size()) * target / rate));
  std::vector<double> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    double src = static_cast<double>(i) * ratio;
    std::size_t i0 = static_cast<std::size_t>(src);
    if (i0 >= in.size() - 1) {
      out[i] = in.back();
      continue;
    }
    double frac = src - static_cast<double>(i0);
    out[i] = in[i0] * (1.0 - frac) + in[i0 + 1] * frac;
  }
  return out;
}

// Resample to 8 kHz and force exactly 15 s: longer clips lose their tail,
// shorter ones are zero padded.
std::vector<double> front_end(const std::vector<double>& samples, int rate) {
  if (samples.empty() || rate <= 0)
    throw input_error("EmptySignal", "no audio samples");
  std::vector<double> s = resample_linear(samples, rate, kSignalRate);
  s.resize(static_cast<std::size_t>(kSignalRate * kMaxSeconds), 0.0);
  return s;
}

// Power spectra of all frames: rows are frames, columns DFT bins 0..128.
Eigen::MatrixXd power_frames(const std::vector<double>& s) {
  const auto n_frames =
      static_cast<Eigen::Index>(s.size() / kFrameStep + 1);
  Eigen::VectorXd window(kFrameLen);
  for (int i = 0; i < kFrameLen; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (kFrameLen - 1));

  Eigen::FFT<double> fft;
  std::vector<double> frame(kNfft);
  std::vector<std::complex<double>> spectrum;
  Eigen::MatrixXd power(n_frames, kNumBins);
  for (Eigen::Index f = 0; f < n_frames; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * kFrameStep;
    for (int i = 0; i < kFrameLen; ++i) {
      std::size_t idx = start + static_cast<std::size_t>(i);
      frame[static_cast<std::size_t>(i)] =
          idx < s.size() ? s[idx] * window[i] : 0.0;
    }
    std::fill(frame.begin() + kFrameLen, frame.end(), 0.0);
    fft.fwd(spectrum, frame);
    for (int k = 0; k < kNumBins; ++k)
      power(f, k) = std::norm(spectrum[static_cast<std::size_t>(k)]);
  }
  return power;
}

// Triangular filters with mel-uniform edges over 0-4000 Hz, sampled at the
// DFT bin centers. With 96 bands the triangles near DC are narrower than a
// bin, so a handful of low filters can end up with zero weight everywhere;
// their energies then sit at the log floor.
Eigen::MatrixXd mel_filterbank(int n_filters) {
  const double mel_hi = hz_to_mel(kSignalRate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(n_filters) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) /
                         static_cast<double>(n_filters + 1));

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_filters, kNumBins);
  for (int m = 0; m < n_filters; ++m) {
    double lo = edges[static_cast<std::size_t>(m)];
    double mid = edges[static_cast<std::size_t>(m) + 1];
    double hi = edges[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < kNumBins; ++k) {
      double f = static_cast<double>(k) * kSignalRate / kNfft;
      if (f <= lo || f >= hi) continue;
      fb(m, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

Eigen::MatrixXd log_mel(const std::vector<double>& samples, int rate,
                        int n_filters) {
  std::vector<double> s = front_end(samples, rate);
  Eigen::MatrixXd power = power_frames(s);
  static thread_local std::pair<int, Eigen::MatrixXd> cache{0, {}};
  if (cache.first != n_filters)
    cache = {n_filters, mel_filterbank(n_filters)};
  Eigen::MatrixXd energies = power * cache.second.transpose();
  return energies.array().max(kLogFloor).log();
}

}  // namespace

Pcm load_pcm(const std::string& path) {
  std::string raw = read_file(path);
  if (raw.size() < 44 || raw.compare(0, 4, "RIFF") != 0 ||
      raw.compare(8, 4, "WAVE") != 0)
    throw input_error("UnsupportedFormat", path + ": not a RIFF/WAVE file");

  int rate = 0;
  int channels = 0;
  int bits = 0;
  int audio_format = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    std::string cid = raw.substr(pos, 4);
    std::uint32_t csize = rd_u32(raw.data() + pos + 4);
    if (cid == "fmt ") {
      if (pos + 8 + 16 > raw.size())
        throw input_error("UnsupportedFormat", path + ": truncated fmt chunk");
      audio_format = rd_u16(raw.data() + pos + 8);
      channels = rd_u16(raw.data() + pos + 10);
      rate = static_cast<int>(rd_u32(raw.data() + pos + 12));
      bits = rd_u16(raw.data() + pos + 22);
    } else if (cid == "data") {
      data_off = pos + 8;
      data_len = csize;
    }
    pos += 8 + csize + (csize & 1);
  }
  if (audio_format != 1 || bits != 16)
    throw input_error("UnsupportedFormat",
                      path + ": only 16-bit PCM is supported");
  if (channels != 1)
    throw input_error("UnsupportedFormat", path + ": only mono is supported");
  if (data_off == 0 || data_off + data_len > raw.size())
    throw input_error("UnsupportedFormat", path + ": missing data chunk");

  Pcm pcm;
  pcm.rate = rate;
  pcm.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < pcm.samples.size(); ++i) {
    std::int16_t v;
    std::memcpy(&v, raw.data() + data_off + 2 * i, 2);
    pcm.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return pcm;
}

void save_pcm(const Pcm& pcm, const std::string& path) {
  const std::uint32_t data_len =
      static_cast<std::uint32_t>(pcm.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  auto put_u32 = [&](std::uint32_t v) {
    out.append(reinterpret_cast<const char*>(&v), 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    out.append(reinterpret_cast<const char*>(&v), 2);
  };
  out += "RIFF";
  put_u32(36 + data_len);
  out += "WAVEfmt ";
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(static_cast<std::uint32_t>(pcm.rate));
  put_u32(static_cast<std::uint32_t>(pcm.rate) * 2);
  put_u16(2);
  put_u16(16);
  out += "data";
  put_u32(data_len);
  for (double s : pcm.samples) {
    double clamped = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<std::int16_t>(
        std::clamp(std::lround(clamped * 32768.0), -32768L, 32767L));
    out.append(reinterpret_cast<const char*>(&v), 2);
  }
  write_file(path, out);
}

std::vector<double> raw_signal_prep(const std::vector<double>& samples,
                                    int rate) {
  std::vector<double> s = front_end(samples, rate);
  std::vector<double> out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 0.5 * (s[2 * i] + s[2 * i + 1]);
  return out;
}

SignalMatrix mel_spectrogram(const std::vector<double>& samples, int rate) {
  return SignalMatrix{log_mel(samples, rate, kMelBands)};
}

SignalMatrix mfcc(const std::vector<double>& samples, int rate) {
  Eigen::MatrixXd lm = log_mel(samples, rate, kMfccBank);

  // Orthonormal DCT-II, coefficients 0..12 of each 26-value frame.
  Eigen::MatrixXd dct(kMfccCoeffs, kMfccBank);
  for (int j = 0; j < kMfccCoeffs; ++j) {
    double scale = std::sqrt((j == 0 ? 1.0 : 2.0) / kMfccBank);
    for (int n = 0; n < kMfccBank; ++n)
      dct(j, n) = scale * std::cos(M_PI * j * (2.0 * n + 1.0) /
                                   (2.0 * kMfccBank));
  }
  return SignalMatrix{lm * dct.transpose()};
}

std::vector<double> pool_signal(const SignalMatrix& m) {
  if (m.frames() == 0 || m.coeffs() == 0)
    throw input_error("EmptySignal", "cannot pool an empty matrix");
  const auto n = static_cast<double>(m.frames());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(4 * m.coeffs() + 1));

  Eigen::VectorXd mean = m.data.colwise().mean();
  for (Eigen::Index c = 0; c < m.coeffs(); ++c) out.push_back(mean[c]);
  for (Eigen::Index c = 0; c < m.coeffs(); ++c) {
    double var = (m.data.col(c).array() - mean[c]).square().sum() / n;
    out.push_back(std::sqrt(var));
  }
  for (Eigen::Index c = 0; c < m.coeffs(); ++c)
    out.push_back(m.data.col(c).minCoeff());
  for (Eigen::Index c = 0; c < m.coeffs(); ++c)
    out.push_back(m.data.col(c).maxCoeff());

  if (m.coeffs() == 1) {
    long crossings = 0;
    for (Eigen::Index i = 1; i < m.frames(); ++i)
      if (m.data(i, 0) * m.data(i - 1, 0) < 0.0) ++crossings;
    out.push_back(m.frames() > 1
                      ? static_cast<double>(crossings) / (n - 1.0)
                      : 0.0);
  }
  return out;
}

}  // namespace ewer
