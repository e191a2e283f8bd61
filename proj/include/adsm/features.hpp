#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "adsm/audio.hpp"
#include "adsm/error.hpp"
#include "adsm/matrix.hpp"

namespace adsm {

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

struct WindowingConfig {
  int window_ms = 250;
  int hop_ms = 100;

  void validate() const {
    if (hop_ms <= 0 || window_ms <= 0 || hop_ms > window_ms)
      throw ValidationError("windowing: require 0 < hop_ms <= window_ms");
  }

  // Millisecond-to-sample conversion truncates: 250 ms at 22050 Hz is
  // 5512 samples, not 5513.
  std::size_t window_samples(int rate) const {
    return static_cast<std::size_t>(window_ms) * static_cast<std::size_t>(rate) / 1000;
  }
  std::size_t hop_samples(int rate) const {
    return static_cast<std::size_t>(hop_ms) * static_cast<std::size_t>(rate) / 1000;
  }
};

/// Number of full windows; the final partial window is dropped.
inline std::size_t frame_count(std::size_t len, std::size_t win, std::size_t hop) {
  if (win == 0 || hop == 0) throw ValidationError("frame_count: zero window or hop");
  if (len < win)
    throw InsufficientDataError("buffer of " + std::to_string(len) +
                                " samples is shorter than one window (" + std::to_string(win) +
                                ")");
  return (len - win) / hop + 1;
}

inline std::vector<std::size_t> frame_offsets(std::size_t len, std::size_t win, std::size_t hop) {
  const std::size_t n = frame_count(len, win, hop);
  std::vector<std::size_t> offsets(n);
  for (std::size_t t = 0; t < n; ++t) offsets[t] = t * hop;
  return offsets;
}

/// Views into the buffer, one per window. The buffer must outlive them.
inline std::vector<std::span<const double>> frame(const AudioBuffer& buf,
                                                  const WindowingConfig& cfg) {
  cfg.validate();
  const std::size_t win = cfg.window_samples(buf.sample_rate);
  const std::size_t hop = cfg.hop_samples(buf.sample_rate);
  std::vector<std::span<const double>> frames;
  for (std::size_t off : frame_offsets(buf.samples.size(), win, hop))
    frames.push_back(std::span<const double>(buf.samples.data() + off, win));
  return frames;
}

// ---------------------------------------------------------------------------
// FFT (iterative radix-2, power-of-two sizes)
// ---------------------------------------------------------------------------

namespace dsp {

inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ValidationError("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace dsp

// ---------------------------------------------------------------------------
// MFCC + deltas
// ---------------------------------------------------------------------------

/// Fixed recipe: 26 mel filters spanning 0..rate/2, pre-emphasis 0.97,
/// Hann window, FFT size = next power of two >= window length, cepstral
/// coefficients c1..c12 plus log frame energy. Derivatives are computed
/// over the per-clip frame sequence.
struct MfccConfig {
  int n_filters = 26;
  int n_ceps = 12;           // c1..c12; c0 replaced by log-energy
  double preemphasis = 0.97;
  double energy_floor = 1e-10;
  int delta_half_window = 2;

  int static_dim() const { return n_ceps + 1; }
  int full_dim() const { return 3 * static_dim(); }
};

namespace dsp {

/// Triangular mel filterbank, filters linear in the mel domain.
/// Returns n_filters rows of (n_fft/2 + 1) weights.
inline Matrix mel_filterbank(int n_filters, std::size_t n_fft, int sample_rate) {
  const std::size_t n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(n_filters) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (n_filters + 1);

  Matrix fb(static_cast<std::size_t>(n_filters), n_bins);
  for (std::size_t bin = 0; bin < n_bins; ++bin) {
    const double hz = static_cast<double>(bin) * sample_rate / static_cast<double>(n_fft);
    const double mel = hz_to_mel(hz);
    for (int f = 0; f < n_filters; ++f) {
      const double left = edges[f], center = edges[f + 1], right = edges[f + 2];
      double w = 0.0;
      if (mel > left && mel < right)
        w = mel <= center ? (mel - left) / (center - left) : (right - mel) / (right - center);
      fb(static_cast<std::size_t>(f), bin) = w;
    }
  }
  return fb;
}

/// Regression-based deltas with edge frames replicated.
inline Matrix compute_deltas(const Matrix& seq, int half_window) {
  Matrix out(seq.rows, seq.cols);
  double denom = 0.0;
  for (int th = 1; th <= half_window; ++th) denom += 2.0 * th * th;
  const auto clamp_idx = [&](long long t) {
    return static_cast<std::size_t>(std::clamp<long long>(t, 0, static_cast<long long>(seq.rows) - 1));
  };
  for (std::size_t t = 0; t < seq.rows; ++t) {
    for (std::size_t c = 0; c < seq.cols; ++c) {
      double acc = 0.0;
      for (int th = 1; th <= half_window; ++th)
        acc += th * (seq(clamp_idx(static_cast<long long>(t) + th), c) -
                     seq(clamp_idx(static_cast<long long>(t) - th), c));
      out(t, c) = acc / denom;
    }
  }
  return out;
}

}  // namespace dsp

/// MFCCdd feature matrix for one clip: one row per window, 39 columns laid
/// out as [c1..c12, log-energy | deltas | delta-deltas]. Never emits
/// NaN/Inf: energies and filter outputs are floored before the log.
inline Matrix compute_mfccdd(const AudioBuffer& buf, const WindowingConfig& wcfg,
                             const MfccConfig& mcfg = {}) {
  wcfg.validate();
  const std::size_t win = wcfg.window_samples(buf.sample_rate);
  const std::size_t hop = wcfg.hop_samples(buf.sample_rate);
  const std::vector<std::size_t> offsets = frame_offsets(buf.samples.size(), win, hop);
  const std::size_t n_fft = dsp::next_pow2(win);
  const std::size_t n_bins = n_fft / 2 + 1;
  const Matrix fb = dsp::mel_filterbank(mcfg.n_filters, n_fft, buf.sample_rate);

  std::vector<double> hann(win);
  for (std::size_t i = 0; i < win; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(win - 1));

  const auto n_static = static_cast<std::size_t>(mcfg.static_dim());
  Matrix statics(offsets.size(), n_static);
  std::vector<std::complex<double>> spectrum(n_fft);
  std::vector<double> power(n_bins), filter_log(static_cast<std::size_t>(mcfg.n_filters));

  for (std::size_t t = 0; t < offsets.size(); ++t) {
    const double* x = buf.samples.data() + offsets[t];

    // Log frame energy over the raw window, floored so silence stays finite.
    double energy = 0.0;
    for (std::size_t i = 0; i < win; ++i) energy += x[i] * x[i];
    statics(t, n_static - 1) = std::log(std::max(energy, mcfg.energy_floor));

    // Pre-emphasis + Hann, zero-padded to the FFT size.
    spectrum.assign(n_fft, {0.0, 0.0});
    spectrum[0] = x[0] * (1.0 - mcfg.preemphasis) * hann[0];
    for (std::size_t i = 1; i < win; ++i)
      spectrum[i] = (x[i] - mcfg.preemphasis * x[i - 1]) * hann[i];
    dsp::fft_inplace(spectrum);
    for (std::size_t b = 0; b < n_bins; ++b) power[b] = std::norm(spectrum[b]);

    for (int f = 0; f < mcfg.n_filters; ++f) {
      double acc = 0.0;
      const auto frow = fb.row(static_cast<std::size_t>(f));
      for (std::size_t b = 0; b < n_bins; ++b) acc += frow[b] * power[b];
      filter_log[static_cast<std::size_t>(f)] = std::log(std::max(acc, mcfg.energy_floor));
    }

    // DCT-II with orthogonal-style scaling, keeping c1..c12.
    const double dct_scale = std::sqrt(2.0 / mcfg.n_filters);
    for (int i = 1; i <= mcfg.n_ceps; ++i) {
      double acc = 0.0;
      for (int j = 0; j < mcfg.n_filters; ++j)
        acc += filter_log[static_cast<std::size_t>(j)] *
               std::cos(std::numbers::pi * i * (j + 0.5) / mcfg.n_filters);
      statics(t, static_cast<std::size_t>(i - 1)) = dct_scale * acc;
    }
  }

  const Matrix d1 = dsp::compute_deltas(statics, mcfg.delta_half_window);
  const Matrix d2 = dsp::compute_deltas(d1, mcfg.delta_half_window);

  Matrix out(statics.rows, static_cast<std::size_t>(mcfg.full_dim()));
  for (std::size_t t = 0; t < statics.rows; ++t) {
    for (std::size_t c = 0; c < n_static; ++c) {
      out(t, c) = statics(t, c);
      out(t, n_static + c) = d1(t, c);
      out(t, 2 * n_static + c) = d2(t, c);
    }
  }
  if (!out.all_finite()) throw ValidationError("mfccdd produced non-finite values");
  return out;
}

// ---------------------------------------------------------------------------
// Z-normalization
// ---------------------------------------------------------------------------

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t dim() const { return mean.size(); }
  bool operator==(const NormalizationStats&) const = default;
};

/// Per-dimension mean and population standard deviation over all training
/// windows pooled. Zero-variance dimensions get std = 1 so constant
/// dimensions normalize to zero instead of dividing by zero.
inline NormalizationStats fit_normalization(std::span<const Matrix> training) {
  std::size_t dim = 0, total_rows = 0;
  for (const Matrix& m : training) {
    if (m.empty()) continue;
    if (dim == 0) dim = m.cols;
    if (m.cols != dim) throw ShapeError("fit_normalization: inconsistent feature dims");
    total_rows += m.rows;
  }
  if (total_rows < 2) throw InsufficientDataError("fit_normalization: need at least 2 rows");

  NormalizationStats stats;
  stats.mean.assign(dim, 0.0);
  stats.std.assign(dim, 0.0);
  for (const Matrix& m : training)
    for (std::size_t r = 0; r < m.rows; ++r) {
      const auto row = m.row(r);
      for (std::size_t c = 0; c < dim; ++c) stats.mean[c] += row[c];
    }
  for (std::size_t c = 0; c < dim; ++c) stats.mean[c] /= static_cast<double>(total_rows);
  for (const Matrix& m : training)
    for (std::size_t r = 0; r < m.rows; ++r) {
      const auto row = m.row(r);
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = row[c] - stats.mean[c];
        stats.std[c] += d * d;
      }
    }
  for (std::size_t c = 0; c < dim; ++c) {
    stats.std[c] = std::sqrt(stats.std[c] / static_cast<double>(total_rows));
    if (stats.std[c] == 0.0) stats.std[c] = 1.0;
  }
  return stats;
}

inline NormalizationStats fit_normalization(const std::vector<Matrix>& training) {
  return fit_normalization(std::span<const Matrix>(training));
}

inline Matrix apply_normalization(const Matrix& m, const NormalizationStats& stats) {
  if (m.cols != stats.dim()) throw ShapeError("apply_normalization: dimension mismatch");
  Matrix out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = (m(r, c) - stats.mean[c]) / stats.std[c];
  return out;
}

}  // namespace adsm
