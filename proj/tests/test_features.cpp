#include "adsm/features.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "adsm/rng.hpp"
#include "test_util.hpp"

using namespace adsm;

namespace {

AudioBuffer make_buffer(std::vector<double> samples, int rate = kTargetSampleRate) {
  AudioBuffer b;
  b.samples = std::move(samples);
  b.sample_rate = rate;
  return b;
}

std::vector<double> sine(double freq, double seconds, double amp = 0.5) {
  std::vector<double> s(static_cast<std::size_t>(kTargetSampleRate * seconds));
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) /
                          kTargetSampleRate);
  return s;
}

/// Brute-force window enumeration: the oracle for the frame-count formula.
std::size_t count_windows_brute_force(std::size_t len, std::size_t win, std::size_t hop) {
  std::size_t count = 0;
  for (std::size_t start = 0; start + win <= len; start += hop) ++count;
  return count;
}

/// Naive O(n^2) DFT as the FFT oracle.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("framing: 30 s at 22050 Hz with 250/100 ms gives 298 windows") {
  const WindowingConfig cfg;
  const std::size_t win = cfg.window_samples(22050);
  const std::size_t hop = cfg.hop_samples(22050);
  CHECK(win == 5512);
  CHECK(hop == 2205);
  CHECK(frame_count(661500, win, hop) == 298);
  CHECK(count_windows_brute_force(661500, win, hop) == 298);
}

TEST_CASE("framing: boundary cases") {
  CHECK(frame_count(100, 100, 40) == 1);        // len == win
  CHECK(frame_count(100 + 39, 100, 40) == 1);   // len == win + hop - 1: partial dropped
  CHECK(frame_count(100 + 40, 100, 40) == 2);
  CHECK_THROWS_AS(frame_count(99, 100, 40), InsufficientDataError);
}

TEST_CASE("framing: formula matches brute force over 1000 random combinations") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t win = 1 + rng.below(500);
    const std::size_t hop = 1 + rng.below(win);
    const std::size_t len = win + rng.below(5000);
    REQUIRE(frame_count(len, win, hop) == count_windows_brute_force(len, win, hop));
  }
}

TEST_CASE("framing: windows start at multiples of the hop") {
  const AudioBuffer buf = make_buffer(sine(440.0, 1.0));
  const WindowingConfig cfg;
  const auto frames = frame(buf, cfg);
  const std::size_t hop = cfg.hop_samples(buf.sample_rate);
  REQUIRE(!frames.empty());
  for (std::size_t t = 0; t < frames.size(); ++t)
    REQUIRE(frames[t].data() == buf.samples.data() + t * hop);
}

TEST_CASE("fft: matches naive DFT on random input") {
  Rng rng(99);
  std::vector<std::complex<double>> x(64);
  for (auto& v : x) v = {rng.next_double() - 0.5, rng.next_double() - 0.5};
  auto fast = x;
  dsp::fft_inplace(fast);
  const auto slow = naive_dft(x);
  for (std::size_t i = 0; i < x.size(); ++i)
    REQUIRE(std::abs(fast[i] - slow[i]) < 1e-9);
}

TEST_CASE("mfccdd: layout is 39 columns, tone vs noise separates") {
  const WindowingConfig cfg;
  const Matrix tone = compute_mfccdd(make_buffer(sine(440.0, 1.0)), cfg);
  Rng rng(5);
  std::vector<double> noise(22050);
  for (double& v : noise) v = 0.6 * (2.0 * rng.next_double() - 1.0);
  const Matrix white = compute_mfccdd(make_buffer(std::move(noise)), cfg);

  REQUIRE(tone.cols == 39);
  REQUIRE(white.cols == 39);
  REQUIRE(tone.rows == white.rows);

  // static parts (first 13 dims) of corresponding frames should differ clearly
  double cos_static = adsm::cosine(tone.row(5).subspan(0, 13), white.row(5).subspan(0, 13));
  CHECK(cos_static < 0.99);
}

TEST_CASE("mfccdd: constant input has vanishing delta blocks") {
  std::vector<double> constant(22050, 0.25);
  const Matrix m = compute_mfccdd(make_buffer(std::move(constant)), WindowingConfig{});
  for (std::size_t t = 0; t < m.rows; ++t)
    for (std::size_t c = 13; c < 39; ++c) REQUIRE(std::abs(m(t, c)) < 1e-9);
}

TEST_CASE("mfccdd: all-zero input hits the declared energy floor") {
  std::vector<double> zeros(22050, 0.0);
  const Matrix m = compute_mfccdd(make_buffer(std::move(zeros)), WindowingConfig{});
  const double expected = std::log(1e-10);
  for (std::size_t t = 0; t < m.rows; ++t)
    REQUIRE(m(t, 12) == expected);  // log-energy column, exact floor
}

TEST_CASE("mfccdd: shifting by one hop shifts the frame sequence") {
  const WindowingConfig cfg;
  const std::size_t hop = cfg.hop_samples(kTargetSampleRate);
  auto samples = sine(523.25, 1.5, 0.4);
  const Matrix full = compute_mfccdd(make_buffer(samples), cfg);
  const Matrix shifted = compute_mfccdd(
      make_buffer({samples.begin() + static_cast<long>(hop), samples.end()}), cfg);

  REQUIRE(shifted.rows + 1 == full.rows);
  // interior frames (clear of the delta edge replication) must agree
  const int guard = 4;
  for (std::size_t t = guard; t + guard < shifted.rows; ++t)
    for (std::size_t c = 0; c < 39; ++c)
      REQUIRE(std::abs(shifted(t, c) - full(t + 1, c)) < 1e-6);
}

TEST_CASE("mfccdd: degenerate inputs never produce NaN or Inf") {
  const WindowingConfig cfg;
  std::vector<std::vector<double>> degenerate;
  degenerate.push_back(std::vector<double>(11025, 0.0));  // silence
  degenerate.push_back(std::vector<double>(11025, 1.0));  // clipped DC
  std::vector<double> impulse(11025, 0.0);
  impulse[5000] = 1.0;
  degenerate.push_back(impulse);  // single impulse
  std::vector<double> alternating(11025);
  for (std::size_t i = 0; i < alternating.size(); ++i) alternating[i] = i % 2 ? 1.0 : -1.0;
  degenerate.push_back(alternating);  // Nyquist-rate clipping

  for (auto& samples : degenerate) {
    const Matrix m = compute_mfccdd(make_buffer(std::move(samples)), cfg);
    REQUIRE(m.all_finite());
  }
}

TEST_CASE("normalization: hand-computed stats with zero-variance substitution") {
  Matrix m(2, 2);
  m(0, 0) = 0.0;
  m(0, 1) = 2.0;
  m(1, 0) = 2.0;
  m(1, 1) = 2.0;
  const auto stats = fit_normalization(std::vector<Matrix>{m});
  CHECK(stats.mean == std::vector<double>{1.0, 2.0});
  CHECK(stats.std == std::vector<double>{1.0, 1.0});  // dim 2 substituted
}

TEST_CASE("normalization: identical rows normalize to all zeros") {
  Matrix m(3, 4, 7.5);
  const auto stats = fit_normalization(std::vector<Matrix>{m});
  const Matrix out = apply_normalization(m, stats);
  for (double v : out.data) REQUIRE(v == 0.0);
}

TEST_CASE("normalization: training pool normalizes to mean 0, std 1") {
  Rng rng(31);
  std::vector<Matrix> parts;
  parts.push_back(testutil::random_matrix(50, 6, rng, -3.0, 5.0));
  parts.push_back(testutil::random_matrix(70, 6, rng, 0.0, 10.0));
  const auto stats = fit_normalization(parts);

  std::vector<double> mean(6, 0.0), var(6, 0.0);
  std::size_t rows = 0;
  for (const Matrix& part : parts) {
    const Matrix n = apply_normalization(part, stats);
    rows += n.rows;
    for (std::size_t r = 0; r < n.rows; ++r)
      for (std::size_t c = 0; c < 6; ++c) mean[c] += n(r, c);
  }
  for (double& v : mean) v /= static_cast<double>(rows);
  for (const Matrix& part : parts) {
    const Matrix n = apply_normalization(part, stats);
    for (std::size_t r = 0; r < n.rows; ++r)
      for (std::size_t c = 0; c < 6; ++c) var[c] += (n(r, c) - mean[c]) * (n(r, c) - mean[c]);
  }
  for (std::size_t c = 0; c < 6; ++c) {
    REQUIRE(std::abs(mean[c]) < 1e-9);
    REQUIRE(std::abs(std::sqrt(var[c] / static_cast<double>(rows)) - 1.0) < 1e-9);
  }
}

TEST_CASE("normalization: x == mean maps to zero, identity stats are identity") {
  NormalizationStats stats;
  stats.mean = {1.0, -2.0};
  stats.std = {3.0, 4.0};
  Matrix at_mean(1, 2);
  at_mean(0, 0) = 1.0;
  at_mean(0, 1) = -2.0;
  const Matrix z = apply_normalization(at_mean, stats);
  CHECK(z(0, 0) == 0.0);
  CHECK(z(0, 1) == 0.0);

  NormalizationStats identity;
  identity.mean = {0.0, 0.0};
  identity.std = {1.0, 1.0};
  Rng rng(3);
  const Matrix m = testutil::random_matrix(4, 2, rng);
  CHECK(apply_normalization(m, identity) == m);
}

TEST_CASE("normalization: out-of-range test data stays finite") {
  Matrix train(2, 2);
  train(0, 0) = 0.0;
  train(0, 1) = 1.0;
  train(1, 0) = 1.0;
  train(1, 1) = 3.0;
  const auto stats = fit_normalization(std::vector<Matrix>{train});
  Matrix test(1, 2);
  test(0, 0) = 1e9;
  test(0, 1) = -1e9;
  CHECK(apply_normalization(test, stats).all_finite());
}

TEST_CASE("normalization: dimension mismatch and tiny pools error") {
  NormalizationStats stats;
  stats.mean = {0.0};
  stats.std = {1.0};
  CHECK_THROWS_AS(apply_normalization(Matrix(1, 2), stats), ShapeError);
  CHECK_THROWS_AS(fit_normalization(std::vector<Matrix>{Matrix(1, 2)}), InsufficientDataError);
}
