#pragma once

// End-to-end enhancement: STFT analysis, per-bin correlation tracking and
// PSD estimation, MVDR + spectral-gain filtering, and synthesis.
//
// Frames are processed strictly in order with bins as the inner loop. With
// several workers, each worker owns a contiguous bin range for the whole
// signal, so the output does not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "gpc/beamformer.hpp"
#include "gpc/error.hpp"
#include "gpc/linalg.hpp"
#include "gpc/spatial.hpp"
#include "gpc/stft.hpp"
#include "gpc/tracker.hpp"

namespace gpc {

struct EnhanceOptions {
  double tau = 1.0;  // seconds
  std::vector<FilterMode> modes{FilterMode::mwf_inst};
  DiffuseSource diffuse = DiffuseSource::instantaneous;
  std::optional<double> gain_floor_db;
  unsigned workers = 1;
};

struct EnhanceDiagnostics {
  std::size_t estimates = 0;        // (frame, bin) pairs run through the tracker
  std::size_t smooth_clamps = 0;    // smooth lambda_1 < phi_d events
  std::size_t inst_clamps = 0;      // instantaneous lambda_1 < phi_d events
  double max_distortion_error = 0;  // max over bins of |w^H h - 1| for the MVDR
  double min_gain = std::numeric_limits<double>::infinity();
  double max_gain = -std::numeric_limits<double>::infinity();

  void merge(const EnhanceDiagnostics& o) {
    estimates += o.estimates;
    smooth_clamps += o.smooth_clamps;
    inst_clamps += o.inst_clamps;
    max_distortion_error = std::max(max_distortion_error, o.max_distortion_error);
    min_gain = std::min(min_gain, o.min_gain);
    max_gain = std::max(max_gain, o.max_gain);
  }
};

struct EnhanceResult {
  std::map<FilterMode, Signal> outputs;
  EnhanceDiagnostics diagnostics;
};

inline ArrayScene scene_for(ArrayScene scene, const StftConfig& cfg) {
  scene.sample_rate = cfg.sample_rate;
  scene.frame_len = cfg.frame_len;
  return scene;
}

/// Runs every requested mode over one shared tracking pass.
inline EnhanceResult enhance(const MultiSignal& y, const ArrayScene& scene_in, const StftConfig& cfg,
                             const EnhanceOptions& opts) {
  cfg.validate();
  const ArrayScene scene = scene_for(scene_in, cfg);
  scene.validate();
  if (y.size() != scene.mics())
    throw InvalidConfig("input has " + std::to_string(y.size()) + " channels but the array geometry has " +
                        std::to_string(scene.mics()) + " microphones");
  if (opts.modes.empty()) throw InvalidConfig("no filter modes requested");

  const bool need_tracker = std::any_of(opts.modes.begin(), opts.modes.end(), [](FilterMode m) {
    return m == FilterMode::mwf_smooth || m == FilterMode::mwf_inst;
  });
  const double zeta = need_tracker ? forgetting_factor(opts.tau, cfg.hop, cfg.sample_rate) : 0.0;

  const Spectrogram spec = analyze(y, cfg);
  const SpatialModel model = SpatialModel::build(scene);
  const std::size_t bins = spec.bins();

  std::map<FilterMode, Spectrogram> out;
  for (FilterMode m : opts.modes) out.emplace(m, Spectrogram(spec.frames(), bins, 1, spec.signal_length()));

  auto process = [&](std::size_t k_begin, std::size_t k_end, EnhanceDiagnostics& diag) {
    std::vector<MvdrFilter> mvdr;
    std::vector<CorrelationTracker> trackers;
    for (std::size_t k = k_begin; k < k_end; ++k) {
      mvdr.push_back(mvdr_filter(model.coherence[k], model.retf[k]));
      diag.max_distortion_error =
          std::max(diag.max_distortion_error, std::abs(dot(mvdr.back().weights, model.retf[k]) - cplx{1.0}));
      if (need_tracker) trackers.push_back(CorrelationTracker::from_coherence(model.coherence[k], zeta));
    }
    for (std::size_t l = 0; l < spec.frames(); ++l)
      for (std::size_t k = k_begin; k < k_end; ++k) {
        const std::size_t i = k - k_begin;
        const auto yk = spec.at(l, k);
        const cplx beam = filter_output(mvdr[i].weights, yk);
        double g_smooth = 0.0, g_inst = 0.0;
        if (need_tracker) {
          const BinEstimate est = track_bin(trackers[i], yk, model.coherence[k], model.retf[k], opts.diffuse);
          g_smooth = mwf_gain(est.smooth.phi_s, est.smooth.phi_d, mvdr[i].hgh);
          g_inst = mwf_gain(est.instantaneous.phi_s, est.instantaneous.phi_d, mvdr[i].hgh);
          diag.min_gain = std::min({diag.min_gain, g_smooth, g_inst});
          diag.max_gain = std::max({diag.max_gain, g_smooth, g_inst});
          diag.smooth_clamps += est.smooth.clamped;
          diag.inst_clamps += est.instantaneous.clamped;
          ++diag.estimates;
        }
        for (auto& [mode, o] : out) {
          switch (mode) {
            case FilterMode::passthrough: o(l, k, 0) = yk[0]; break;
            case FilterMode::mvdr: o(l, k, 0) = beam; break;
            case FilterMode::mwf_smooth: o(l, k, 0) = apply_gain_floor(g_smooth, opts.gain_floor_db) * beam; break;
            case FilterMode::mwf_inst: o(l, k, 0) = apply_gain_floor(g_inst, opts.gain_floor_db) * beam; break;
          }
        }
      }
  };

  EnhanceResult result;
  const unsigned workers = std::clamp<unsigned>(opts.workers, 1u, static_cast<unsigned>(bins));
  std::vector<EnhanceDiagnostics> diags(workers);
  if (workers == 1) {
    process(0, bins, diags[0]);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = bins * w / workers, hi = bins * (w + 1) / workers;
      pool.emplace_back([&, w, lo, hi] {
        try {
          process(lo, hi, diags[w]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (const auto& d : diags) result.diagnostics.merge(d);

  for (auto& [mode, o] : out) result.outputs.emplace(mode, synthesize(o, cfg).front());
  return result;
}

}  // namespace gpc
