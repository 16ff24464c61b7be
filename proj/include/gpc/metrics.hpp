#pragma once

// Objective enhancement scores against a clean reference:
//  - frequency-weighted segmental SIR over critical bands
//  - LPC cepstral distance
// Both use 25 ms frames with a 10 ms hop and skip silent reference frames.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "gpc/error.hpp"
#include "gpc/fft.hpp"
#include "gpc/linalg.hpp"
#include "gpc/stft.hpp"

namespace gpc {

struct MetricConfig {
  double sample_rate = 16000.0;
  double frame_s = 0.025;
  double hop_s = 0.010;
  double silence_db = 40.0;  // frames this far below the loudest frame are silent
  double sir_floor_db = -10.0;
  double sir_ceiling_db = 35.0;
  double band_weight_exponent = 0.2;
  int lpc_order = 10;
  double cd_ceiling_db = 10.0;

  std::size_t frame_len() const { return static_cast<std::size_t>(std::lround(frame_s * sample_rate)); }
  std::size_t hop() const { return static_cast<std::size_t>(std::lround(hop_s * sample_rate)); }
};

/// Per-frame score trace; `used[i]` is false for frames excluded as silent.
struct FrameTrace {
  std::vector<double> score;
  std::vector<bool> used;

  double mean() const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < score.size(); ++i)
      if (used[i]) {
        s += score[i];
        ++n;
      }
    return n ? s / static_cast<double>(n) : 0.0;
  }
};

struct MetricReport {
  double fw_seg_sir = 0.0;         // dB
  double cepstral_distance = 0.0;  // dB
  FrameTrace sir_frames;
  FrameTrace cd_frames;
};

namespace detail {

inline std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

inline std::size_t metric_frames(std::size_t len, const MetricConfig& cfg) {
  const std::size_t n = cfg.frame_len();
  return len < n ? 0 : (len - n) / cfg.hop() + 1;
}

inline std::vector<double> frame_energies(const Signal& x, const MetricConfig& cfg) {
  const std::size_t n = cfg.frame_len();
  std::vector<double> e(metric_frames(x.size(), cfg), 0.0);
  for (std::size_t f = 0; f < e.size(); ++f)
    for (std::size_t i = 0; i < n; ++i) e[f] += x[f * cfg.hop() + i] * x[f * cfg.hop() + i];
  return e;
}

inline std::vector<bool> active_frames(const Signal& x, const MetricConfig& cfg) {
  const std::vector<double> e = frame_energies(x, cfg);
  const double peak = e.empty() ? 0.0 : *std::max_element(e.begin(), e.end());
  const double threshold = peak * std::pow(10.0, -cfg.silence_db / 10.0);
  std::vector<bool> active(e.size());
  for (std::size_t f = 0; f < e.size(); ++f) active[f] = e[f] > 0.0 && e[f] >= threshold;
  return active;
}

inline void check_lengths(const Signal& a, const Signal& b) {
  if (a.size() != b.size())
    throw LengthMismatch("metrics: reference has " + std::to_string(a.size()) + " samples, test has " +
                         std::to_string(b.size()));
}

// Zwicker critical band edges in Hz.
inline constexpr std::array<double, 25> kBandEdges{0,    100,  200,  300,  400,  510,  630,  770,  920,
                                                  1080, 1270, 1480, 1720, 2000, 2320, 2700, 3150, 3700,
                                                  4400, 5300, 6400, 7700, 9500, 12000, 15500};

/// Levinson-Durbin predictor coefficients a_1..a_p of
/// x[n] ~ sum_k a_k x[n-k]. Returns false for a degenerate frame.
inline bool lpc(const std::vector<double>& frame, int order, std::vector<double>& a) {
  const std::size_t n = frame.size();
  std::vector<double> r(static_cast<std::size_t>(order) + 1, 0.0);
  for (int lag = 0; lag <= order; ++lag)
    for (std::size_t i = static_cast<std::size_t>(lag); i < n; ++i) r[lag] += frame[i] * frame[i - lag];
  if (!(r[0] > 0.0)) return false;
  r[0] *= 1.0 + 1e-9;  // slight white-noise correction for near-singular frames
  a.assign(static_cast<std::size_t>(order) + 1, 0.0);
  std::vector<double> prev(a.size());
  double err = r[0];
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc -= a[j] * r[i - j];
    const double k = acc / err;
    prev = a;
    a[i] = k;
    for (int j = 1; j < i; ++j) a[j] = prev[j] - k * prev[i - j];
    err *= 1.0 - k * k;
    if (!(err > 0.0)) return false;
  }
  return true;
}

/// LPC cepstrum c_1..c_p of the all-pole model 1 / (1 - sum a_k z^-k).
inline std::vector<double> lpc_cepstrum(const std::vector<double>& a, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  for (int n = 1; n <= order; ++n) {
    double s = a[n];
    for (int k = 1; k < n; ++k) s += (static_cast<double>(k) / n) * c[k] * a[n - k];
    c[n] = s;
  }
  return c;
}

}  // namespace detail

/// Frequency-weighted segmental SIR: per critical band, the ratio of
/// reference energy to the energy of (test - reference), clamped to
/// [-10, 35] dB and weighted by reference band energy^0.2.
inline FrameTrace fw_seg_sir_trace(const Signal& reference, const Signal& test, const MetricConfig& cfg = {}) {
  detail::check_lengths(reference, test);
  const std::size_t n = cfg.frame_len();
  std::size_t nfft = 2;
  while (nfft < n) nfft *= 2;
  RealFft fft(nfft);
  const std::vector<double> window = detail::hann(n);

  std::vector<std::size_t> band_lo, band_hi;
  const double bin_hz = cfg.sample_rate / static_cast<double>(nfft);
  for (std::size_t b = 0; b + 1 < detail::kBandEdges.size(); ++b) {
    if (detail::kBandEdges[b] >= cfg.sample_rate / 2) break;
    const auto lo = static_cast<std::size_t>(std::ceil(detail::kBandEdges[b] / bin_hz));
    const auto hi = std::min(static_cast<std::size_t>(std::ceil(detail::kBandEdges[b + 1] / bin_hz)), fft.bins());
    if (hi > lo) {
      band_lo.push_back(lo);
      band_hi.push_back(hi);
    }
  }

  FrameTrace trace;
  trace.used = detail::active_frames(reference, cfg);
  trace.score.assign(trace.used.size(), 0.0);
  std::vector<double> rbuf(nfft, 0.0), ebuf(nfft, 0.0);
  std::vector<cplx> rspec(fft.bins()), espec(fft.bins());
  for (std::size_t f = 0; f < trace.used.size(); ++f) {
    if (!trace.used[f]) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = f * cfg.hop() + i;
      rbuf[i] = reference[t] * window[i];
      ebuf[i] = (test[t] - reference[t]) * window[i];
    }
    fft.forward(rbuf, rspec);
    fft.forward(ebuf, espec);
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < band_lo.size(); ++b) {
      double xr = 0.0, xe = 0.0;
      for (std::size_t k = band_lo[b]; k < band_hi[b]; ++k) {
        xr += abs2(rspec[k]);
        xe += abs2(espec[k]);
      }
      if (!(xr > 0.0)) continue;
      const double snr = xe > 0.0 ? std::clamp(10.0 * std::log10(xr / xe), cfg.sir_floor_db, cfg.sir_ceiling_db)
                                  : cfg.sir_ceiling_db;
      const double w = std::pow(xr, cfg.band_weight_exponent);
      num += w * snr;
      den += w;
    }
    if (den > 0.0)
      trace.score[f] = num / den;
    else
      trace.used[f] = false;
  }
  return trace;
}

inline double fw_seg_sir(const Signal& reference, const Signal& test, const MetricConfig& cfg = {}) {
  return fw_seg_sir_trace(reference, test, cfg).mean();
}

/// Cepstral distance 10/ln10 sqrt(2 sum_k (c_k - c'_k)^2) between order-10
/// LPC cepstra, clamped to [0, 10] dB. A frame counts when it is active in
/// both signals, which keeps the measure symmetric.
inline FrameTrace cepstral_distance_trace(const Signal& reference, const Signal& test, const MetricConfig& cfg = {}) {
  detail::check_lengths(reference, test);
  const std::size_t n = cfg.frame_len();
  const std::vector<double> window = detail::hann(n);
  const std::vector<bool> ra = detail::active_frames(reference, cfg);
  const std::vector<bool> ta = detail::active_frames(test, cfg);
  FrameTrace trace;
  trace.used.assign(ra.size(), false);
  trace.score.assign(ra.size(), 0.0);
  std::vector<double> fr(n), ft(n), ar, at;
  const double scale = 10.0 / std::numbers::ln10;
  for (std::size_t f = 0; f < ra.size(); ++f) {
    if (!ra[f] || !ta[f]) continue;
    for (std::size_t i = 0; i < n; ++i) {
      fr[i] = reference[f * cfg.hop() + i] * window[i];
      ft[i] = test[f * cfg.hop() + i] * window[i];
    }
    if (!detail::lpc(fr, cfg.lpc_order, ar) || !detail::lpc(ft, cfg.lpc_order, at)) continue;
    const std::vector<double> cr = detail::lpc_cepstrum(ar, cfg.lpc_order);
    const std::vector<double> ct = detail::lpc_cepstrum(at, cfg.lpc_order);
    double s = 0.0;
    for (int k = 1; k <= cfg.lpc_order; ++k) s += (cr[k] - ct[k]) * (cr[k] - ct[k]);
    trace.score[f] = std::clamp(scale * std::sqrt(2.0 * s), 0.0, cfg.cd_ceiling_db);
    trace.used[f] = true;
  }
  return trace;
}

inline double cepstral_distance(const Signal& reference, const Signal& test, const MetricConfig& cfg = {}) {
  return cepstral_distance_trace(reference, test, cfg).mean();
}

inline MetricReport evaluate(const Signal& reference, const Signal& test, const MetricConfig& cfg = {}) {
  MetricReport r;
  r.sir_frames = fw_seg_sir_trace(reference, test, cfg);
  r.cd_frames = cepstral_distance_trace(reference, test, cfg);
  r.fw_seg_sir = r.sir_frames.mean();
  r.cepstral_distance = r.cd_frames.mean();
  return r;
}

}  // namespace gpc
