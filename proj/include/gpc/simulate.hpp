#pragma once

// Synthetic test scenes: a far-field point source observed by a
// microphone array, mixed with diffuse noise whose inter-channel
// coherence follows the spherically isotropic model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "gpc/error.hpp"
#include "gpc/fft.hpp"
#include "gpc/linalg.hpp"
#include "gpc/spatial.hpp"
#include "gpc/stft.hpp"

namespace gpc {

/// Deterministic speech-like test signal: voiced syllables with gliding
/// pitch and vowel formants, short fricative bursts and pauses.
inline Signal synthetic_speech(std::uint64_t seed, double duration_s, double sample_rate = 16000.0) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const std::size_t total = static_cast<std::size_t>(duration_s * sample_rate);
  Signal out(total, 0.0);

  struct Vowel {
    double f1, f2, f3;
  };
  static constexpr std::array<Vowel, 5> kVowels{{{730, 1090, 2440}, {270, 2290, 3010}, {300, 870, 2240},
                                                 {530, 1840, 2480}, {570, 840, 2410}}};
  auto formant_gain = [](double f, const Vowel& v) {
    auto peak = [f](double fc, double bw) { return 1.0 / (1.0 + std::pow((f - fc) / bw, 2.0)); };
    const double tilt = 1.0 / (1.0 + f / 400.0);
    return tilt * (0.2 + peak(v.f1, 90.0) + 0.7 * peak(v.f2, 120.0) + 0.4 * peak(v.f3, 160.0));
  };

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t pos = static_cast<std::size_t>(uni(0.05, 0.3) * sample_rate);
  while (pos < total) {
    const int syllables = static_cast<int>(uni(2.0, 7.0));
    for (int s = 0; s < syllables && pos < total; ++s) {
      if (uni(0.0, 1.0) < 0.35) {
        // fricative: first-differenced white noise
        const std::size_t len = static_cast<std::size_t>(uni(0.04, 0.12) * sample_rate);
        const double amp = uni(0.05, 0.2);
        double prev = 0.0;
        for (std::size_t i = 0; i < len && pos + i < total; ++i) {
          const double env = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
          const double n = gauss(rng);
          out[pos + i] += amp * env * (n - 0.9 * prev);
          prev = n;
        }
        pos += len;
      }
      const std::size_t len = static_cast<std::size_t>(uni(0.08, 0.25) * sample_rate);
      const Vowel& v = kVowels[static_cast<std::size_t>(uni(0.0, 5.0)) % kVowels.size()];
      const double f0_start = uni(90.0, 220.0);
      const double f0_end = f0_start * uni(0.8, 1.2);
      const double amp = uni(0.3, 1.0);
      double phase = 0.0;
      for (std::size_t i = 0; i < len && pos + i < total; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(len);
        const double f0 = f0_start + (f0_end - f0_start) * frac;
        phase += 2.0 * std::numbers::pi * f0 / sample_rate;
        const double env = std::pow(std::sin(std::numbers::pi * frac), 0.6);
        double acc = 0.0;
        for (int h = 1; h * f0 < std::min(5000.0, 0.5 * sample_rate); ++h)
          acc += formant_gain(h * f0, v) * std::sin(h * phase);
        out[pos + i] += amp * env * acc;
      }
      pos += len + static_cast<std::size_t>(uni(0.0, 0.06) * sample_rate);
    }
    pos += static_cast<std::size_t>(uni(0.1, 0.5) * sample_rate);
  }

  double peak = 0.0;
  for (double x : out) peak = std::max(peak, std::abs(x));
  if (peak > 0.0)
    for (double& x : out) x *= 0.5 / peak;
  return out;
}

/// Source image at every microphone, X_m(l,k) = h_m(k) S(l,k), rendered
/// through the STFT so that channel 1 reproduces the input.
inline MultiSignal render_source(const Signal& source, const ArrayScene& scene, const StftConfig& cfg) {
  scene.validate();
  if (scene.frame_len != cfg.frame_len || scene.sample_rate != cfg.sample_rate)
    throw InvalidConfig("render_source: scene and STFT configuration disagree");
  const Spectrogram s = analyze(MultiSignal{source}, cfg);
  Spectrogram x(s.frames(), s.bins(), scene.mics(), s.signal_length());
  for (std::size_t k = 0; k < s.bins(); ++k) {
    const CVector h = steering_retf(scene, k);
    for (std::size_t l = 0; l < s.frames(); ++l)
      for (std::size_t m = 0; m < h.size(); ++m) x(l, k, m) = h[m] * s(l, k, 0);
  }
  return synthesize(x, cfg);
}

/// Per-bin magnitude of a signal's long-term spectrum, normalized to unit
/// mean power. Used to give diffuse noise a speech-like spectral envelope.
inline RVector long_term_spectrum(const Signal& signal, const StftConfig& cfg) {
  const Spectrogram s = analyze(MultiSignal{signal}, cfg);
  RVector mag(s.bins(), 0.0);
  for (std::size_t l = 0; l < s.frames(); ++l)
    for (std::size_t k = 0; k < s.bins(); ++k) mag[k] += abs2(s(l, k, 0));
  double mean = 0.0;
  for (double p : mag) mean += p;
  mean /= static_cast<double>(mag.size());
  if (!(mean > 0.0)) throw DegenerateInput("long_term_spectrum: signal is silent");
  for (double& p : mag) p = std::sqrt(p / mean);
  return mag;
}

/// Diffuse noise V(l,k) = Gamma(k)^{1/2} n(l,k) with n i.i.d. unit-power
/// circular complex Gaussian. Each bin draws from its own stream seeded by
/// (seed, k), so bins may be generated in any order.
inline MultiSignal render_diffuse_noise(const ArrayScene& scene, std::uint64_t seed, std::size_t length,
                                        const StftConfig& cfg, const RVector* spectral_shape = nullptr) {
  cfg.validate();
  if (scene.mics() < 1) throw InvalidConfig("render_diffuse_noise: scene has no microphones");
  if (spectral_shape && spectral_shape->size() != cfg.bins())
    throw DimensionMismatch("render_diffuse_noise: spectral shape has wrong bin count");
  const std::size_t mics = scene.mics();
  const std::size_t frames = frame_count(length, cfg);
  Spectrogram v(frames, cfg.bins(), mics, length);
  CVector n(mics);
  for (std::size_t k = 0; k < cfg.bins(); ++k) {
    const ComplexMatrix color = cholesky(diffuse_coherence(scene, k));
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    const double gain = spectral_shape ? (*spectral_shape)[k] : 1.0;
    for (std::size_t l = 0; l < frames; ++l) {
      for (cplx& z : n) {
        const double re = gauss(rng);
        z = {re, gauss(rng)};
      }
      for (std::size_t i = 0; i < mics; ++i) {
        cplx s{};
        for (std::size_t j = 0; j <= i; ++j) s += color(i, j) * n[j];
        v(l, k, i) = gain * s;
      }
    }
  }
  return synthesize(v, cfg);
}

/// Convolves a mono source with one impulse response per microphone.
inline MultiSignal convolve_rirs(const Signal& source, const MultiSignal& rirs) {
  if (rirs.empty()) throw InvalidConfig("convolve_rirs: no impulse responses");
  std::size_t rir_len = 0;
  for (const Signal& r : rirs) rir_len = std::max(rir_len, r.size());
  std::size_t n = 2;
  while (n < source.size() + rir_len) n *= 2;
  RealFft fft(n);
  std::vector<double> buf(n, 0.0);
  std::copy(source.begin(), source.end(), buf.begin());
  std::vector<cplx> src(fft.bins()), spec(fft.bins());
  fft.forward(buf, src);
  MultiSignal out;
  for (const Signal& r : rirs) {
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(r.begin(), r.end(), buf.begin());
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= src[k];
    fft.inverse(spec, buf);
    out.emplace_back(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(source.size()));
  }
  return out;
}

inline double energy(const MultiSignal& s) {
  double e = 0.0;
  for (const Signal& ch : s)
    for (double x : ch) e += x * x;
  return e;
}

struct Mixture {
  MultiSignal mixture;  // y = x + alpha v
  MultiSignal noise;    // alpha v
  Signal reference;     // source image at the first microphone
  double noise_scale = 0.0;
};

/// Scales v so that 10 log10(|x|^2 / |alpha v|^2) = snr_db over all
/// channels and samples. snr_db = +infinity leaves the source clean.
inline Mixture mix_at_snr(const MultiSignal& x, const MultiSignal& v, double snr_db) {
  if (x.size() != v.size() || x.empty()) throw DimensionMismatch("mix_at_snr: channel counts differ");
  for (std::size_t m = 0; m < x.size(); ++m)
    if (x[m].size() != v[m].size()) throw LengthMismatch("mix_at_snr: channel lengths differ");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw InvalidConfig("mix_at_snr: SNR must be finite or +inf");
  const double ex = energy(x);
  if (!(ex > 0.0)) throw DegenerateInput("mix_at_snr: source image is silent");
  Mixture mix;
  mix.reference = x.front();
  if (std::isinf(snr_db)) {
    mix.mixture = x;
    mix.noise = MultiSignal(x.size(), Signal(x.front().size(), 0.0));
    return mix;
  }
  const double ev = energy(v);
  if (!(ev > 0.0)) throw DegenerateInput("mix_at_snr: noise is silent");
  mix.noise_scale = std::sqrt(ex / (ev * std::pow(10.0, snr_db / 10.0)));
  mix.noise = v;
  mix.mixture = x;
  for (std::size_t m = 0; m < x.size(); ++m)
    for (std::size_t i = 0; i < x[m].size(); ++i) {
      mix.noise[m][i] *= mix.noise_scale;
      mix.mixture[m][i] += mix.noise[m][i];
    }
  return mix;
}

struct ScenarioSpec {
  ArrayScene scene;
  Signal source;  // mono, at the scene sample rate
  std::uint64_t noise_seed = 1;
  double snr_db = 5.0;
  bool babble_shaped = false;  // shape the noise with the source's long-term spectrum
};

/// Renders source image and diffuse noise and mixes them.
inline Mixture render_scenario(const ScenarioSpec& spec, const StftConfig& cfg) {
  if (spec.source.size() < cfg.frame_len) throw InvalidConfig("scenario: source shorter than one STFT frame");
  const MultiSignal x = render_source(spec.source, spec.scene, cfg);
  std::optional<RVector> shape;
  if (spec.babble_shaped) shape = long_term_spectrum(spec.source, cfg);
  const MultiSignal v =
      render_diffuse_noise(spec.scene, spec.noise_seed, spec.source.size(), cfg, shape ? &*shape : nullptr);
  return mix_at_snr(x, v, spec.snr_db);
}

}  // namespace gpc
