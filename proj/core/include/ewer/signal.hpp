#ifndef EWER_SIGNAL_HPP_
#define EWER_SIGNAL_HPP_

#include <string>
#include <vector>

#include <Eigen/Core>

namespace ewer {

struct SignalMatrix {
  // frames x coeffs, row per analysis frame.
  Eigen::MatrixXd data;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index coeffs() const { return data.cols(); }
};

struct Pcm {
  std::vector<double> samples;  // in [-1, 1]
  int rate = 0;                 // Hz
};

// 16-bit mono PCM WAV only; multi-channel and other encodings are rejected
// with UnsupportedFormat. Sample values are scaled by 1/32768.
Pcm load_pcm(const std::string& path);
void save_pcm(const Pcm& pcm, const std::string& path);

// All signal features share one front end: resample to 8 kHz by linear
// interpolation and clip or zero-pad to 15 s.
inline constexpr int kSignalRate = 8000;
inline constexpr double kMaxSeconds = 15.0;

// 8 kHz, 15 s, then averaged over adjacent sample pairs down to 4 kHz:
// exactly 60000 values. Throws EmptySignal.
std::vector<double> raw_signal_prep(const std::vector<double>& samples,
                                    int rate);

// Log mel filterbank energies: 25 ms Hamming frames every 10 ms, 256-point
// DFT, 96 triangular mel filters over 0-4000 Hz, natural log with floor
// 1e-10. A 15 s clip yields 1501 x 96.
SignalMatrix mel_spectrogram(const std::vector<double>& samples, int rate);

// 13 cepstral coefficients per 10 ms frame: orthonormal DCT-II of a
// 26-filter log mel bank, coefficients 0-12, no liftering. 1501 x 13 for
// 15 s.
SignalMatrix mfcc(const std::vector<double>& samples, int rate);

// Per-coefficient mean / stddev / min / max over frames (4 x coeffs
// values); single-column input additionally gets its zero-crossing rate.
std::vector<double> pool_signal(const SignalMatrix& m);

}  // namespace ewer

#endif  // EWER_SIGNAL_HPP_
