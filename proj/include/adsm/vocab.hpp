#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "adsm/error.hpp"
#include "adsm/features.hpp"
#include "adsm/io.hpp"
#include "adsm/matrix.hpp"
#include "adsm/parallel.hpp"
#include "adsm/rng.hpp"

namespace adsm {

/// The audio-word vocabulary: k centroids in (normalized) feature space,
/// together with the normalization statistics that were in effect when it
/// was trained. Immutable once trained.
struct AudioWordVocabulary {
  Matrix centroids;  // k x d
  NormalizationStats norm_stats;
  std::uint64_t seed = 0;
  double inertia = 0.0;

  std::size_t k() const { return centroids.rows; }
  std::size_t dim() const { return centroids.cols; }
};

struct VocabTrainConfig {
  int k = 300;
  int max_clips = 1000;
  int max_iters = 100;
  double tol = 1e-6;  // relative inertia improvement
  std::uint64_t seed = 0;
  int restarts = 1;

  void validate() const {
    if (k < 2) throw ValidationError("vocab: k must be >= 2");
    if (max_clips < 1) throw ValidationError("vocab: max_clips must be >= 1");
    if (max_iters < 1) throw ValidationError("vocab: max_iters must be >= 1");
    if (tol < 0.0) throw ValidationError("vocab: tol must be >= 0");
    if (restarts < 1) throw ValidationError("vocab: restarts must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// k-means (Lloyd + k-means++ initialization)
// ---------------------------------------------------------------------------

struct KMeansResult {
  Matrix centroids;
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_trace;  // one entry per assignment step
};

namespace kmeans_detail {

/// Assign every row to its nearest centroid (squared Euclidean, ties to the
/// lowest index). Partial sums are accumulated per fixed-size chunk and
/// merged in chunk order, so results do not depend on the worker count.
inline double assign_rows(const Matrix& rows, const Matrix& centroids,
                          std::vector<std::size_t>& labels, std::vector<double>& dists,
                          unsigned workers) {
  const std::size_t n = rows.rows;
  const std::size_t k = centroids.rows;
  labels.resize(n);
  dists.resize(n);

  constexpr std::size_t kChunk = 2048;
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<double> chunk_inertia(nchunks, 0.0);

  parallel::for_chunks(n, kChunk, workers, [&](std::size_t begin, std::size_t end, std::size_t ci) {
    double local = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
      const auto x = rows.row(r);
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < k; ++j) {
        const double d = squared_distance(x, centroids.row(j));
        if (d < best) {
          best = d;
          best_j = j;
        }
      }
      labels[r] = best_j;
      dists[r] = best;
      local += best;
    }
    chunk_inertia[ci] = local;
  });

  double inertia = 0.0;
  for (double v : chunk_inertia) inertia += v;  // fixed merge order
  return inertia;
}

/// k-means++ seeding: first centroid uniform, the rest sampled with
/// probability proportional to squared distance from the nearest chosen one.
inline Matrix init_plusplus(const Matrix& rows, std::size_t k, Rng& rng) {
  const std::size_t n = rows.rows;
  Matrix centroids(k, rows.cols);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t first = static_cast<std::size_t>(rng.below(n));
  std::copy_n(rows.row(first).data(), rows.cols, centroids.row(0).data());

  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = squared_distance(rows.row(r), centroids.row(j - 1));
      if (d < d2[r]) d2[r] = d;
      total += d2[r];
    }
    std::size_t pick;
    if (total > 0.0) {
      const double target = rng.next_double() * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t r = 0; r < n; ++r) {
        cum += d2[r];
        if (cum > target) {
          pick = r;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));  // all points coincide
    }
    std::copy_n(rows.row(pick).data(), rows.cols, centroids.row(j).data());
  }
  return centroids;
}

}  // namespace kmeans_detail

/// One Lloyd run from a k-means++ start. The per-iteration inertia trace is
/// non-increasing; empty clusters are re-seeded with the point farthest
/// from its current centroid.
inline KMeansResult kmeans_run(const Matrix& rows, std::size_t k, Rng rng, int max_iters,
                               double tol, unsigned workers = 1) {
  if (rows.rows < k)
    throw InsufficientDataError("k-means: " + std::to_string(rows.rows) + " rows < k = " +
                                std::to_string(k));
  if (k < 1) throw ValidationError("k-means: k must be >= 1");

  KMeansResult res;
  res.centroids = kmeans_detail::init_plusplus(rows, k, rng);

  const std::size_t n = rows.rows;
  const std::size_t d = rows.cols;
  std::vector<std::size_t> labels, prev_labels;
  std::vector<double> dists;
  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (int it = 0; it < max_iters; ++it) {
    const double inertia =
        kmeans_detail::assign_rows(rows, res.centroids, labels, dists, workers);
    res.inertia_trace.push_back(inertia);
    res.inertia = inertia;
    res.iterations = it + 1;

    const bool stable = (it > 0 && labels == prev_labels);
    const bool converged =
        std::isfinite(prev_inertia) && (prev_inertia - inertia) <= tol * prev_inertia;
    prev_inertia = inertia;

    // Update step: means of assignment sets. Runs before the exit check so
    // the returned centroids are always the means of the returned labels.
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), std::size_t{0});
    for (std::size_t r = 0; r < n; ++r) {
      const auto x = rows.row(r);
      double* s = sums.data() + labels[r] * d;
      for (std::size_t c = 0; c < d; ++c) s[c] += x[c];
      ++counts[labels[r]];
    }
    // Re-seed empty clusters with the globally farthest point, stolen from
    // a cluster that can spare it.
    bool reseeded = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t r = 0; r < n; ++r)
        if (counts[labels[r]] >= 2 && dists[r] > far_d) {
          far_d = dists[r];
          far = r;
        }
      if (far == n) continue;  // fewer distinct points than clusters
      const std::size_t old = labels[far];
      const auto x = rows.row(far);
      double* s_old = sums.data() + old * d;
      double* s_new = sums.data() + j * d;
      for (std::size_t c = 0; c < d; ++c) {
        s_old[c] -= x[c];
        s_new[c] += x[c];
      }
      --counts[old];
      ++counts[j];
      labels[far] = j;
      dists[far] = 0.0;
      reseeded = true;
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      double* s = sums.data() + j * d;
      auto crow = res.centroids.row(j);
      for (std::size_t c = 0; c < d; ++c) crow[c] = s[c] / static_cast<double>(counts[j]);
    }

    prev_labels = labels;
    if (!reseeded && (stable || converged)) break;
  }

  res.assignment = std::move(labels);
  return res;
}

/// Best of `restarts` independent runs (lowest inertia; ties keep the
/// earliest restart).
inline KMeansResult kmeans_best(const Matrix& rows, std::size_t k, std::uint64_t seed,
                                int max_iters, double tol, int restarts, unsigned workers = 1) {
  const Rng base(seed);
  KMeansResult best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    KMeansResult run = kmeans_run(rows, k, base.fork(static_cast<std::uint64_t>(r)), max_iters,
                                  tol, workers);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Vocabulary training
// ---------------------------------------------------------------------------

/// Uniform sample of training clip ids without replacement,
/// size min(max_clips, |train|). Input order does not matter: ids are
/// sorted before sampling, and the result comes back sorted.
inline std::vector<std::string> sample_training_clips(std::vector<std::string> train_ids,
                                                      std::size_t max_clips, std::uint64_t seed) {
  if (train_ids.empty()) throw ValidationError("sample_training_clips: empty training set");
  std::sort(train_ids.begin(), train_ids.end());
  if (train_ids.size() <= max_clips) return train_ids;
  Rng rng(seed);
  const std::vector<std::size_t> idx = rng.sample_indices(train_ids.size(), max_clips);
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(train_ids[i]);
  return out;
}

/// Train the audio-word vocabulary on pooled, already-normalized window
/// features. Rows must arrive in canonical (clip_id, window index) order
/// so that seeding is independent of ingestion order.
inline AudioWordVocabulary train_vocabulary(const Matrix& pooled, const VocabTrainConfig& cfg,
                                            NormalizationStats norm_stats, unsigned workers = 1) {
  cfg.validate();
  if (pooled.rows < static_cast<std::size_t>(cfg.k))
    throw InsufficientDataError("train_vocabulary: " + std::to_string(pooled.rows) +
                                " pooled windows < k = " + std::to_string(cfg.k));
  KMeansResult res = kmeans_best(pooled, static_cast<std::size_t>(cfg.k), cfg.seed, cfg.max_iters,
                                 cfg.tol, cfg.restarts, workers);
  AudioWordVocabulary vocab;
  vocab.centroids = std::move(res.centroids);
  vocab.norm_stats = std::move(norm_stats);
  vocab.seed = cfg.seed;
  vocab.inertia = res.inertia;
  return vocab;
}

// ---------------------------------------------------------------------------
// Vocabulary serialization (.awv)
//
// Layout: "ADSMVOC1 <k> <d> <seed>\n", then k*d centroid doubles, d means,
// d stds, the final inertia, all little-endian, then a CRC32 of everything
// before it. Round-trips bit-exactly.
// ---------------------------------------------------------------------------

inline constexpr const char* kVocabMagic = "ADSMVOC1";

inline void save_vocabulary(const AudioWordVocabulary& v, const std::filesystem::path& path) {
  if (v.centroids.empty()) throw ValidationError("save_vocabulary: empty vocabulary");
  if (v.norm_stats.dim() != v.dim())
    throw ShapeError("save_vocabulary: norm stats dim != centroid dim");
  std::string out = std::string(kVocabMagic) + " " + std::to_string(v.k()) + " " +
                    std::to_string(v.dim()) + " " + std::to_string(v.seed) + "\n";
  for (double x : v.centroids.data) io::append_f64_le(out, x);
  for (double x : v.norm_stats.mean) io::append_f64_le(out, x);
  for (double x : v.norm_stats.std) io::append_f64_le(out, x);
  io::append_f64_le(out, v.inertia);
  io::append_u32_le(out, io::crc32(out.data(), out.size()));
  io::write_file(path, out);
}

inline AudioWordVocabulary load_vocabulary(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string::npos) throw FormatError(path.string() + ": missing vocabulary header");
  std::istringstream header(bytes.substr(0, nl));
  std::string magic;
  std::size_t k = 0, d = 0;
  std::uint64_t seed = 0;
  if (!(header >> magic >> k >> d >> seed) || magic != kVocabMagic)
    throw FormatError(path.string() + ": bad vocabulary header (version mismatch?)");
  if (k < 2 || d == 0) throw FormatError(path.string() + ": invalid dimensions in header");

  const std::size_t payload_doubles = k * d + 2 * d + 1;
  const std::size_t expected = nl + 1 + payload_doubles * 8 + 4;
  if (bytes.size() != expected)
    throw FormatError(path.string() + ": truncated or oversized vocabulary file");

  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t stored = io::read_u32_le(base + bytes.size() - 4);
  const std::uint32_t actual = io::crc32(bytes.data(), bytes.size() - 4);
  if (stored != actual) throw FormatError(path.string() + ": checksum failure");

  AudioWordVocabulary v;
  v.seed = seed;
  v.centroids = Matrix(k, d);
  const unsigned char* p = base + nl + 1;
  for (std::size_t i = 0; i < k * d; ++i, p += 8) v.centroids.data[i] = io::read_f64_le(p);
  v.norm_stats.mean.resize(d);
  for (std::size_t i = 0; i < d; ++i, p += 8) v.norm_stats.mean[i] = io::read_f64_le(p);
  v.norm_stats.std.resize(d);
  for (std::size_t i = 0; i < d; ++i, p += 8) v.norm_stats.std[i] = io::read_f64_le(p);
  v.inertia = io::read_f64_le(p);
  return v;
}

}  // namespace adsm
