#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "gpc/simulate.hpp"
#include "test_support.hpp"

using namespace gpc;
using namespace gpc::test;
using Catch::Approx;

namespace {

ArrayScene scene_with(std::size_t m, double spacing, double doa) {
  ArrayScene s;
  s.mic_positions = linear_array(m, spacing);
  s.doa_deg = doa;
  return s;
}

/// Sample coherence between channels i and j at bin k over all frames.
cplx sample_coherence(const Spectrogram& v, std::size_t k, std::size_t i, std::size_t j) {
  cplx cross{};
  double pi = 0.0, pj = 0.0;
  for (std::size_t l = 0; l < v.frames(); ++l) {
    cross += v(l, k, i) * std::conj(v(l, k, j));
    pi += std::norm(v(l, k, i));
    pj += std::norm(v(l, k, j));
  }
  return cross / std::sqrt(pi * pj);
}

}  // namespace

TEST_CASE("render_source", "[simulate]") {
  const StftConfig cfg;
  const Signal s = synthetic_speech(3, 1.0);
  SECTION("broadside copies the input to every channel") {
    const MultiSignal x = render_source(s, scene_with(5, 0.08, 0.0), cfg);
    REQUIRE(x.size() == 5);
    for (const Signal& ch : x) CHECK(rel_rms(ch, s, cfg.frame_len, s.size() - cfg.frame_len) <= 1e-9);
  }
  SECTION("zero input") {
    for (const Signal& ch : render_source(Signal(4000, 0.0), scene_with(3, 0.08, 30.0), cfg))
      for (double v : ch) CHECK(v == 0.0);
  }
  SECTION("channel 1 reproduces the input for any DOA") {
    const MultiSignal x = render_source(s, scene_with(4, 0.08, 60.0), cfg);
    CHECK(rel_rms(x[0], s, 0, s.size()) <= 1e-10);
  }
  SECTION("DOA 60 degrees delays the far channel by the plane-wave delay") {
    const Signal w = white_noise(5, 32000);
    const ArrayScene scene = scene_with(5, 0.08, 60.0);
    const MultiSignal x = render_source(w, scene, cfg);
    const double delay = 0.32 * std::sin(60.0 * M_PI / 180.0) / scene.speed_of_sound * cfg.sample_rate;
    int best = 0;
    double peak = -1e300;
    for (int lag = -30; lag <= 30; ++lag) {
      double c = 0.0;
      for (std::size_t t = 1000; t + 1000 < w.size(); ++t) c += x[4][t] * x[0][std::size_t(long(t) - lag)];
      if (c > peak) peak = c, best = lag;
    }
    CHECK(best == int(std::lround(delay)));
    CHECK(best == 13);
  }
  SECTION("mismatched configuration") {
    CHECK_THROWS_AS(render_source(s, scene_with(3, 0.08, 0.0), StftConfig{256, 128, 16000}), InvalidConfig);
  }
}

TEST_CASE("render_diffuse_noise", "[simulate]") {
  const StftConfig cfg;
  SECTION("one microphone gives white Gaussian noise") {
    const Signal v = render_diffuse_noise(scene_with(1, 0.08, 0.0), 9, 160000, cfg)[0];
    double mean = 0.0, var = 0.0, lag1 = 0.0, m4 = 0.0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - mean;
      var += d * d;
      m4 += d * d * d * d;
      if (i) lag1 += d * (v[i - 1] - mean);
    }
    const double n = double(v.size());
    CHECK(std::abs(mean) <= 5.0 * std::sqrt(var / n) / std::sqrt(n) + 1e-12);
    CHECK(std::abs(lag1 / var) <= 0.02);
    CHECK(m4 / n / (var / n * var / n) == Approx(3.0).margin(0.1));
  }
  SECTION("same seed is bit-identical, different seeds differ") {
    const ArrayScene scene = scene_with(3, 0.08, 0.0);
    const MultiSignal a = render_diffuse_noise(scene, 11, 8000, cfg);
    const MultiSignal b = render_diffuse_noise(scene, 11, 8000, cfg);
    const MultiSignal c = render_diffuse_noise(scene, 12, 8000, cfg);
    CHECK(a == b);
    CHECK(a != c);
  }
  SECTION("coherence vanishes at the sinc zero") {
    // d = c / (2 f) places the zero of the 1-2 coherence at bin 64 (2000 Hz)
    const ArrayScene scene = scene_with(2, 343.0 / 4000.0, 0.0);
    CHECK(std::abs(diffuse_coherence(scene, 64)(1, 0)) <= 1e-12);
    const MultiSignal v = render_diffuse_noise(scene, 21, 600 * cfg.hop, cfg);
    const Spectrogram s = analyze(v, cfg);
    CHECK(s.frames() >= 500);
    CHECK(std::abs(sample_coherence(s, 64, 0, 1)) <= 0.1);
  }
  SECTION("sample coherence converges to the model at 2000 frames") {
    const ArrayScene scene = scene_with(5, 0.08, 0.0);
    const MultiSignal v = render_diffuse_noise(scene, 22, 2000 * cfg.hop, cfg);
    const Spectrogram s = analyze(v, cfg);
    for (std::size_t k : {4u, 16u, 40u, 64u, 100u, 200u}) {
      const HermitianMatrix g = diffuse_coherence(scene, k);
      double worst = 0.0;
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) worst = std::max(worst, std::abs(sample_coherence(s, k, i, j) - g(i, j)));
      CHECK(worst <= 0.05);
    }
  }
  SECTION("spectral shaping scales each bin") {
    const ArrayScene scene = scene_with(2, 0.08, 0.0);
    RVector shape(cfg.bins(), 1.0);
    for (std::size_t k = 128; k < cfg.bins(); ++k) shape[k] = 0.0;
    const Spectrogram s = analyze(render_diffuse_noise(scene, 3, 64000, cfg, &shape), cfg);
    double low = 0.0, high = 0.0;
    for (std::size_t l = 0; l < s.frames(); ++l) {
      for (std::size_t k = 10; k < 100; ++k) low += std::norm(s(l, k, 0));
      for (std::size_t k = 150; k < 240; ++k) high += std::norm(s(l, k, 0));
    }
    // synthesis then analysis spreads energy through the window sidelobes
    CHECK(high <= 1e-4 * low);
    const RVector bad(3, 1.0);
    CHECK_THROWS_AS(render_diffuse_noise(scene, 3, 64000, cfg, &bad), DimensionMismatch);
  }
}

TEST_CASE("mix_at_snr", "[simulate]") {
  const StftConfig cfg;
  const ArrayScene scene = scene_with(3, 0.08, 20.0);
  const MultiSignal x = render_source(synthetic_speech(4, 1.0), scene, cfg);
  const MultiSignal v = render_diffuse_noise(scene, 5, x[0].size(), cfg);

  SECTION("0 dB") {
    const Mixture m = mix_at_snr(x, v, 0.0);
    CHECK(energy(x) == Approx(energy(m.noise)).epsilon(1e-10));
  }
  SECTION("5 dB") {
    const Mixture m = mix_at_snr(x, v, 5.0);
    CHECK(energy(x) / energy(m.noise) == Approx(std::pow(10.0, 0.5)).epsilon(1e-10));
    CHECK(energy(x) / energy(m.noise) == Approx(3.1623).epsilon(1e-4));
    // the reference is the mic-1 source image; x + alpha v is rebuilt within round-off
    CHECK(m.reference == x[0]);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < x[c].size(); ++i) {
        CHECK(m.mixture[c][i] == x[c][i] + m.noise[c][i]);
        CHECK(std::abs(m.mixture[c][i] - m.noise[c][i] - x[c][i]) <= 4 * std::numeric_limits<double>::epsilon() *
                                                                         (std::abs(x[c][i]) + std::abs(m.noise[c][i])));
      }
  }
  SECTION("clean") {
    const Mixture m = mix_at_snr(x, v, std::numeric_limits<double>::infinity());
    CHECK(m.mixture == x);
    CHECK(energy(m.noise) == 0.0);
  }
  SECTION("errors") {
    CHECK_THROWS_AS(mix_at_snr(MultiSignal(3, Signal(x[0].size(), 0.0)), v, 5.0), DegenerateInput);
    CHECK_THROWS_AS(mix_at_snr(x, MultiSignal(3, Signal(x[0].size(), 0.0)), 5.0), DegenerateInput);
    CHECK_THROWS_AS(mix_at_snr(x, MultiSignal(2, Signal(x[0].size())), 5.0), DimensionMismatch);
    CHECK_THROWS_AS(mix_at_snr(x, v, std::nan("")), InvalidConfig);
  }
}

TEST_CASE("render_scenario and helpers", "[simulate]") {
  const StftConfig cfg;
  ScenarioSpec spec;
  spec.scene = scene_with(5, 0.08, 0.0);
  spec.source = synthetic_speech(6, 2.0);
  const Mixture a = render_scenario(spec, cfg);
  const Mixture b = render_scenario(spec, cfg);
  CHECK(a.mixture == b.mixture);
  CHECK(energy(MultiSignal{a.reference}) > 0.0);
  CHECK(a.mixture.size() == 5);
  CHECK(a.mixture[0].size() == spec.source.size());
  spec.babble_shaped = true;
  CHECK(render_scenario(spec, cfg).mixture != a.mixture);
  spec.source.resize(100);
  CHECK_THROWS_AS(render_scenario(spec, cfg), InvalidConfig);

  SECTION("synthetic speech is deterministic, bounded and has pauses") {
    const Signal s = synthetic_speech(7, 3.0);
    CHECK(s == synthetic_speech(7, 3.0));
    CHECK(s != synthetic_speech(8, 3.0));
    CHECK(s.size() == 48000);
    double peak = 0.0;
    for (double v : s) peak = std::max(peak, std::abs(v));
    CHECK(peak == Approx(0.5));
  }
  SECTION("convolution with impulse responses matches direct convolution") {
    const Signal src = white_noise(1, 300);
    const MultiSignal rirs{{1.0}, {0.0, 0.0, 0.5, -0.25}};
    const MultiSignal out = convolve_rirs(src, rirs);
    for (std::size_t t = 0; t < src.size(); ++t) {
      CHECK(out[0][t] == Approx(src[t]).margin(1e-12));
      double ref = 0.0;
      for (std::size_t j = 0; j < 4; ++j)
        if (t >= j) ref += rirs[1][j] * src[t - j];
      CHECK(out[1][t] == Approx(ref).margin(1e-12));
    }
  }
}
