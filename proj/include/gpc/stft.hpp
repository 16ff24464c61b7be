#pragma once

// Square-root periodic Hann STFT at 50% overlap with matching
// overlap-add synthesis. The analysis/synthesis window product sums to
// exactly one at hop N/2, so analyze followed by synthesize is an identity.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gpc/error.hpp"
#include "gpc/fft.hpp"
#include "gpc/linalg.hpp"

namespace gpc {

using Signal = std::vector<double>;
/// Channel-major multichannel samples; all channels have equal length.
using MultiSignal = std::vector<Signal>;

struct StftConfig {
  std::size_t frame_len = 512;
  std::size_t hop = 256;
  double sample_rate = 16000.0;

  std::size_t bins() const { return frame_len / 2 + 1; }
  double bin_frequency(std::size_t k) const { return static_cast<double>(k) * sample_rate / static_cast<double>(frame_len); }

  void validate() const {
    if (frame_len < 2 || frame_len % 2 != 0) throw InvalidConfig("stft: frame length must be even, got " + std::to_string(frame_len));
    if (hop != frame_len / 2) throw InvalidConfig("stft: hop must equal half the frame length (sqrt-Hann at 50% overlap)");
    if (!(sample_rate > 0.0)) throw InvalidConfig("stft: sample rate must be positive");
  }
};

/// Complex STFT coefficients y_m(l, k), stored frame-major so that the
/// M-channel vector of one (frame, bin) is contiguous.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(std::size_t frames, std::size_t bins, std::size_t channels, std::size_t signal_length = 0)
      : frames_(frames), bins_(bins), channels_(channels), signal_length_(signal_length),
        data_(frames * bins * channels) {}

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t channels() const { return channels_; }
  /// Length of the time signal this spectrogram was computed from.
  std::size_t signal_length() const { return signal_length_; }

  std::span<cplx> at(std::size_t l, std::size_t k) { return {data_.data() + (l * bins_ + k) * channels_, channels_}; }
  std::span<const cplx> at(std::size_t l, std::size_t k) const {
    return {data_.data() + (l * bins_ + k) * channels_, channels_};
  }
  cplx& operator()(std::size_t l, std::size_t k, std::size_t m) { return data_[(l * bins_ + k) * channels_ + m]; }
  cplx operator()(std::size_t l, std::size_t k, std::size_t m) const { return data_[(l * bins_ + k) * channels_ + m]; }

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::size_t channels_ = 0;
  std::size_t signal_length_ = 0;
  std::vector<cplx> data_;
};

/// sqrt of the periodic Hann window 0.5 - 0.5 cos(2 pi n / N).
inline std::vector<double> sqrt_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

/// Number of frames for a signal of `length` samples. The signal is
/// preceded by N - R zeros and frame l covers padded samples
/// [l R, l R + N), so every input sample lies in exactly two frames.
inline std::size_t frame_count(std::size_t length, const StftConfig& cfg) {
  return (length + cfg.hop - 1) / cfg.hop + 1;
}

inline Spectrogram analyze(const MultiSignal& signal, const StftConfig& cfg) {
  cfg.validate();
  if (signal.empty()) throw InvalidConfig("stft: signal has no channels");
  const std::size_t len = signal.front().size();
  for (const Signal& ch : signal)
    if (ch.size() != len) throw DimensionMismatch("stft: channels have different lengths");
  if (len < cfg.frame_len) throw InvalidConfig("stft: signal shorter than one frame");

  const std::size_t n = cfg.frame_len;
  const std::size_t pad = n - cfg.hop;
  const std::size_t frames = frame_count(len, cfg);
  const std::vector<double> window = sqrt_hann(n);
  RealFft fft(n);
  Spectrogram spec(frames, cfg.bins(), signal.size(), len);
  std::vector<double> buf(n);
  std::vector<cplx> out(cfg.bins());
  for (std::size_t m = 0; m < signal.size(); ++m)
    for (std::size_t l = 0; l < frames; ++l) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t padded = l * cfg.hop + i;
        buf[i] = (padded >= pad && padded - pad < len) ? signal[m][padded - pad] * window[i] : 0.0;
      }
      fft.forward(buf, out);
      for (std::size_t k = 0; k < out.size(); ++k) spec(l, k, m) = out[k];
    }
  return spec;
}

/// Windowed overlap-add inverse of analyze. `length` defaults to the
/// length recorded in the spectrogram.
inline MultiSignal synthesize(const Spectrogram& spec, const StftConfig& cfg, std::size_t length = 0) {
  cfg.validate();
  if (spec.bins() != cfg.bins()) throw InvalidConfig("stft: spectrogram bin count does not match frame length");
  if (length == 0) length = spec.signal_length();
  if (length == 0) length = spec.frames() > 0 ? (spec.frames() - 1) * cfg.hop : 0;

  const std::size_t n = cfg.frame_len;
  const std::size_t pad = n - cfg.hop;
  const std::vector<double> window = sqrt_hann(n);
  RealFft fft(n);
  MultiSignal out(spec.channels(), Signal(length, 0.0));
  std::vector<cplx> bins(cfg.bins());
  std::vector<double> frame(n);
  for (std::size_t m = 0; m < spec.channels(); ++m)
    for (std::size_t l = 0; l < spec.frames(); ++l) {
      for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = spec(l, k, m);
      fft.inverse(bins, frame);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t padded = l * cfg.hop + i;
        if (padded >= pad && padded - pad < length) out[m][padded - pad] += frame[i] * window[i];
      }
    }
  return out;
}

}  // namespace gpc
