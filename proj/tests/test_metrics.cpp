#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gpc/metrics.hpp"
#include "gpc/simulate.hpp"
#include "test_support.hpp"

using namespace gpc;
using namespace gpc::test;
using Catch::Approx;

namespace {

Signal scaled_sum(const Signal& a, const Signal& b, double gb) {
  Signal out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + gb * b[i];
  return out;
}

}  // namespace

TEST_CASE("frequency-weighted segmental SIR", "[metrics]") {
  const Signal speech = synthetic_speech(1, 3.0);
  SECTION("identical signals reach the ceiling") {
    CHECK(fw_seg_sir(speech, speech) == 35.0);
  }
  SECTION("independent noise of equal power is about 0 dB") {
    const Signal ref = white_noise(2, 48000);
    const Signal test = scaled_sum(ref, white_noise(3, 48000), 1.0);
    CHECK(fw_seg_sir(ref, test) == Approx(0.0).margin(1.0));
  }
  SECTION("negated reference is about -6 dB") {
    Signal neg = speech;
    for (double& v : neg) v = -v;
    CHECK(fw_seg_sir(speech, neg) == Approx(-20.0 * std::log10(2.0)).margin(1e-9));
    CHECK(fw_seg_sir(speech, neg) == Approx(-6.0).margin(1.0));
  }
  SECTION("a scaled copy gives the per-band ratio 1/(1-a)^2") {
    const Signal half = scaled_sum(speech, speech, -0.5);
    CHECK(fw_seg_sir(speech, half) == Approx(20.0 * std::log10(2.0)).margin(1e-9));
  }
  SECTION("non-increasing as white interference grows") {
    const Signal n = white_noise(4, speech.size());
    double prev = 1e9;
    for (double g : {0.003, 0.01, 0.03, 0.1, 0.3}) {
      const double v = fw_seg_sir(speech, scaled_sum(speech, n, g));
      CHECK(v <= prev);
      prev = v;
    }
    CHECK(prev < fw_seg_sir(speech, scaled_sum(speech, n, 0.003)));
  }
  SECTION("silent frames are excluded") {
    Signal s = white_noise(5, 32000);
    for (std::size_t i = 16000; i < s.size(); ++i) s[i] = 0.0;
    const FrameTrace t = fw_seg_sir_trace(s, scaled_sum(s, white_noise(6, 32000), 1.0));
    const MetricConfig cfg;
    const std::size_t last = t.used.size() - 1;
    CHECK(t.used[0]);
    CHECK_FALSE(t.used[last]);
    CHECK(t.used.size() == (32000 - cfg.frame_len()) / cfg.hop() + 1);
    // the silent half carries pure interference but does not pull the mean down
    CHECK(t.mean() == Approx(0.0).margin(1.0));
  }
  SECTION("length mismatch") {
    CHECK_THROWS_AS(fw_seg_sir(speech, Signal(speech.size() - 1)), LengthMismatch);
  }
}

TEST_CASE("LPC and cepstrum", "[metrics]") {
  SECTION("single-pole cepstrum is rho^n / n") {
    const double rho = 0.7;
    std::vector<double> a(11, 0.0);
    a[1] = rho;
    const std::vector<double> c = detail::lpc_cepstrum(a, 10);
    for (int n = 1; n <= 10; ++n) CHECK(c[std::size_t(n)] == Approx(std::pow(rho, n) / n).epsilon(1e-12));
  }
  SECTION("Levinson-Durbin recovers an AR(2) process") {
    const Signal e = white_noise(7, 200000);
    Signal x(e.size(), 0.0);
    for (std::size_t t = 2; t < x.size(); ++t) x[t] = 1.2 * x[t - 1] - 0.5 * x[t - 2] + e[t];
    std::vector<double> a;
    REQUIRE(detail::lpc(x, 2, a));
    CHECK(a[1] == Approx(1.2).margin(0.01));
    CHECK(a[2] == Approx(-0.5).margin(0.01));
  }
  SECTION("silent frame is degenerate") {
    std::vector<double> a;
    CHECK_FALSE(detail::lpc(std::vector<double>(400, 0.0), 10, a));
  }
}

TEST_CASE("cepstral distance", "[metrics]") {
  const Signal speech = synthetic_speech(8, 3.0);
  SECTION("identical signals") {
    CHECK(cepstral_distance(speech, speech) == 0.0);
  }
  SECTION("symmetric") {
    const Signal other = scaled_sum(speech, white_noise(9, speech.size()), 0.05);
    CHECK(std::abs(cepstral_distance(speech, other) - cepstral_distance(other, speech)) <= 1e-10);
  }
  SECTION("gain invariant") {
    Signal louder = speech;
    for (double& v : louder) v *= 3.0;
    CHECK(cepstral_distance(speech, louder) == Approx(0.0).margin(1e-6));
  }
  SECTION("strongly lowpassed copy") {
    const Signal ref = white_noise(10, 48000);
    Signal low(ref.size(), 0.0);
    double y1 = 0.0, y2 = 0.0;
    for (std::size_t t = 0; t < ref.size(); ++t) {
      // two cascaded one-pole lowpass sections at pole 0.9
      y1 = 0.9 * y1 + 0.1 * ref[t];
      y2 = 0.9 * y2 + 0.1 * y1;
      low[t] = y2;
    }
    const double cd = cepstral_distance(ref, low);
    CHECK(cd > 1.0);
    CHECK(cd <= 10.0);
  }
  SECTION("bounded in [0, 10]") {
    const FrameTrace t = cepstral_distance_trace(speech, white_noise(11, speech.size()));
    for (std::size_t i = 0; i < t.score.size(); ++i) {
      CHECK(t.score[i] >= 0.0);
      CHECK(t.score[i] <= 10.0);
    }
  }
  SECTION("length mismatch") {
    CHECK_THROWS_AS(cepstral_distance(speech, Signal(10)), LengthMismatch);
  }
}

TEST_CASE("evaluate", "[metrics]") {
  const Signal speech = synthetic_speech(12, 2.0);
  const Signal noisy = scaled_sum(speech, white_noise(13, speech.size()), 0.05);
  const MetricReport r = evaluate(speech, noisy);
  CHECK(r.fw_seg_sir == fw_seg_sir(speech, noisy));
  CHECK(r.cepstral_distance == cepstral_distance(speech, noisy));
  CHECK(r.sir_frames.score.size() == r.cd_frames.score.size());
}
