#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "adsm/corpus.hpp"
#include "adsm/error.hpp"
#include "adsm/io.hpp"
#include "adsm/log.hpp"
#include "adsm/matrix.hpp"
#include "adsm/parallel.hpp"
#include "adsm/vocab.hpp"

namespace adsm {

// ---------------------------------------------------------------------------
// Spaces and configuration
// ---------------------------------------------------------------------------

enum class Space { kAudio, kAdsm, kAdsmAutotag, kFusion, kFusionAutotag };

inline const char* to_string(Space s) {
  switch (s) {
    case Space::kAudio: return "audio";
    case Space::kAdsm: return "adsm";
    case Space::kAdsmAutotag: return "adsm-autotag";
    case Space::kFusion: return "fusion";
    case Space::kFusionAutotag: return "fusion-autotag";
  }
  return "?";
}

inline Space parse_space(const std::string& name) {
  if (name == "audio") return Space::kAudio;
  if (name == "adsm") return Space::kAdsm;
  if (name == "adsm-autotag") return Space::kAdsmAutotag;
  if (name == "fusion") return Space::kFusion;
  if (name == "fusion-autotag") return Space::kFusionAutotag;
  throw ValidationError("unknown space: " + name);
}

enum class Encoding { kSoftCosine, kHard };

inline const char* to_string(Encoding e) {
  return e == Encoding::kSoftCosine ? "soft-cosine" : "hard";
}

inline Encoding parse_encoding(const std::string& name) {
  if (name == "soft-cosine") return Encoding::kSoftCosine;
  if (name == "hard") return Encoding::kHard;
  throw ValidationError("unknown encoding: " + name);
}

enum class FusionMode { kAverage, kConcatenate };

inline const char* to_string(FusionMode m) {
  return m == FusionMode::kAverage ? "average" : "concatenate";
}

inline FusionMode parse_fusion_mode(const std::string& name) {
  if (name == "average") return FusionMode::kAverage;
  if (name == "concatenate") return FusionMode::kConcatenate;
  throw ValidationError("unknown fusion mode: " + name);
}

struct FusionConfig {
  double w = 0.9;
  FusionMode mode = FusionMode::kAverage;

  void validate() const {
    if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("fusion: w must be in [0,1]");
  }
};

struct ClipEmbedding {
  std::string clip_id;
  Space space = Space::kAudio;
  std::vector<double> values;
};

// ---------------------------------------------------------------------------
// Window encoding and AUDIO clip embeddings
// ---------------------------------------------------------------------------

namespace embed_detail {

inline std::size_t nearest_centroid(std::span<const double> x, const Matrix& centroids) {
  std::size_t best_j = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.rows; ++j) {
    const double d = squared_distance(x, centroids.row(j));
    if (d < best) {
      best = d;
      best_j = j;
    }
  }
  return best_j;
}

}  // namespace embed_detail

/// Encode one feature vector against the audio-word centroids. Soft mode
/// assigns weights proportional to the cosine similarity clipped at zero,
/// renormalized onto the probability simplex; when every similarity is
/// non-positive (or x is the zero vector, where cosine is undefined) the
/// window is hard-assigned to the nearest centroid by Euclidean distance.
inline std::vector<double> encode_window(std::span<const double> x, const Matrix& centroids,
                                         Encoding encoding = Encoding::kSoftCosine) {
  if (centroids.empty()) throw ValidationError("encode_window: empty vocabulary");
  if (x.size() != centroids.cols) throw ShapeError("encode_window: dimension mismatch");

  std::vector<double> weights(centroids.rows, 0.0);
  if (encoding == Encoding::kHard) {
    weights[embed_detail::nearest_centroid(x, centroids)] = 1.0;
    return weights;
  }

  double total = 0.0;
  for (std::size_t j = 0; j < centroids.rows; ++j) {
    const double s = std::max(0.0, cosine(x, centroids.row(j)));
    weights[j] = s;
    total += s;
  }
  if (total <= 0.0) {
    std::fill(weights.begin(), weights.end(), 0.0);
    weights[embed_detail::nearest_centroid(x, centroids)] = 1.0;
    return weights;
  }
  for (double& w : weights) w /= total;
  return weights;
}

/// Bag-of-audio-words representation of a clip: the arithmetic mean of its
/// window encodings. Stays on the probability simplex.
inline ClipEmbedding clip_audio_embedding(const std::string& clip_id, const Matrix& features,
                                          const AudioWordVocabulary& vocab,
                                          Encoding encoding = Encoding::kSoftCosine) {
  if (features.rows == 0) throw ValidationError("clip_audio_embedding: no feature rows");
  if (features.cols != vocab.dim())
    throw ShapeError("clip_audio_embedding: feature dim " + std::to_string(features.cols) +
                     " != vocabulary dim " + std::to_string(vocab.dim()));
  std::vector<double> acc(vocab.k(), 0.0);
  for (std::size_t r = 0; r < features.rows; ++r) {
    const std::vector<double> e = encode_window(features.row(r), vocab.centroids, encoding);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += e[j];
  }
  for (double& v : acc) v /= static_cast<double>(features.rows);
  return {clip_id, Space::kAudio, std::move(acc)};
}

// ---------------------------------------------------------------------------
// Tag matrix and PPMI
// ---------------------------------------------------------------------------

/// Tag embeddings over the audio-word space: `raw` rows are means of the
/// AUDIO embeddings of the clips bearing the tag; `ppmi` is the
/// PPMI-weighted view used for all semantic computations.
struct TagMatrix {
  std::vector<std::string> tags;  // sorted
  Matrix raw;                     // T x k
  Matrix ppmi;                    // T x k

  std::size_t tag_count() const { return tags.size(); }

  std::optional<std::size_t> index_of(const std::string& tag) const {
    const auto it = std::lower_bound(tags.begin(), tags.end(), tag);
    if (it == tags.end() || *it != tag) return std::nullopt;
    return static_cast<std::size_t>(it - tags.begin());
  }
};

/// PPMI weighting of a non-negative matrix treated as co-occurrence mass:
/// out_ij = max(0, log(p_ij / (p_i * p_j))). Zero cells stay zero.
inline Matrix ppmi_weight(const Matrix& raw) {
  if (raw.empty()) throw ValidationError("ppmi_weight: empty matrix");
  double total = 0.0;
  std::vector<double> row_sum(raw.rows, 0.0), col_sum(raw.cols, 0.0);
  for (std::size_t i = 0; i < raw.rows; ++i)
    for (std::size_t j = 0; j < raw.cols; ++j) {
      const double x = raw(i, j);
      if (x < 0.0) throw ValidationError("ppmi_weight: negative entry");
      row_sum[i] += x;
      col_sum[j] += x;
      total += x;
    }
  if (total <= 0.0) throw ValidationError("ppmi_weight: all-zero matrix");

  Matrix out(raw.rows, raw.cols);
  for (std::size_t i = 0; i < raw.rows; ++i)
    for (std::size_t j = 0; j < raw.cols; ++j) {
      const double x = raw(i, j);
      if (x <= 0.0) continue;
      // log((x/total) / ((row/total)*(col/total))) == log(x*total/(row*col))
      const double pmi = std::log((x * total) / (row_sum[i] * col_sum[j]));
      out(i, j) = pmi > 0.0 ? pmi : 0.0;
    }
  return out;
}

/// Build tag representations from training-clip AUDIO embeddings and the
/// corpus annotations. Tags borne by no training clip are dropped with a
/// warning; an entirely untagged training set is an error.
inline TagMatrix build_tag_matrix(const std::vector<ClipEmbedding>& train_audio,
                                  const Corpus& corpus) {
  std::map<std::string, std::vector<const ClipEmbedding*>> by_tag;
  std::size_t dim = 0;
  for (const ClipEmbedding& emb : train_audio) {
    if (dim == 0) dim = emb.values.size();
    if (emb.values.size() != dim) throw ShapeError("build_tag_matrix: embedding length mismatch");
    for (const std::string& tag : corpus.clip(emb.clip_id).tags) by_tag[tag].push_back(&emb);
  }
  if (by_tag.empty()) throw ValidationError("build_tag_matrix: no tagged training clips");

  TagMatrix tm;
  tm.tags.reserve(by_tag.size());
  for (const auto& [tag, clips] : by_tag) tm.tags.push_back(tag);  // map order = sorted
  tm.raw = Matrix(tm.tags.size(), dim);
  for (std::size_t t = 0; t < tm.tags.size(); ++t) {
    const auto& clips = by_tag[tm.tags[t]];
    auto row = tm.raw.row(t);
    for (const ClipEmbedding* emb : clips)
      for (std::size_t j = 0; j < dim; ++j) row[j] += emb->values[j];
    for (std::size_t j = 0; j < dim; ++j) row[j] /= static_cast<double>(clips.size());
  }
  tm.ppmi = ppmi_weight(tm.raw);
  return tm;
}

/// Semantic clip embedding: unweighted mean of the PPMI rows of the given
/// tags. Throws NoTagsError when the list is empty so callers can fall back
/// to auto-tagging.
inline std::vector<double> semantic_clip_embedding(const std::vector<std::string>& tags,
                                                   const TagMatrix& tm) {
  if (tags.empty()) throw NoTagsError("semantic_clip_embedding: clip has no usable tags");
  std::vector<double> acc(tm.raw.cols, 0.0);
  for (const std::string& tag : tags) {
    const auto idx = tm.index_of(tag);
    if (!idx) throw ResolutionError("semantic_clip_embedding: unknown tag '" + tag + "'");
    const auto row = tm.ppmi.row(*idx);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += row[j];
  }
  for (double& v : acc) v /= static_cast<double>(tags.size());
  return acc;
}

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

/// Combine an acoustic and a semantic clip embedding. Average mode computes
/// w*semantic + (1-w)*audio; concatenate mode joins w*semantic with
/// (1-w)*audio, semantic part first.
inline ClipEmbedding fuse(const ClipEmbedding& audio, const ClipEmbedding& semantic,
                          const FusionConfig& cfg) {
  cfg.validate();
  const Space out_space =
      semantic.space == Space::kAdsmAutotag ? Space::kFusionAutotag : Space::kFusion;
  ClipEmbedding out;
  out.clip_id = audio.clip_id;
  out.space = out_space;
  if (cfg.mode == FusionMode::kAverage) {
    if (audio.values.size() != semantic.values.size())
      throw ShapeError("fuse: average mode needs equal lengths (" +
                       std::to_string(audio.values.size()) + " vs " +
                       std::to_string(semantic.values.size()) + ")");
    out.values.resize(audio.values.size());
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] = cfg.w * semantic.values[i] + (1.0 - cfg.w) * audio.values[i];
  } else {
    out.values.reserve(audio.values.size() + semantic.values.size());
    for (double v : semantic.values) out.values.push_back(cfg.w * v);
    for (double v : audio.values) out.values.push_back((1.0 - cfg.w) * v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVD projection (one-sided Jacobi on the data matrix)
// ---------------------------------------------------------------------------

struct SvdProjector {
  int rank = 0;
  Matrix basis;  // len x rank, orthonormal columns (right singular vectors)
  Space fitted_on = Space::kAudio;
};

/// Top-`rank` right singular vectors of the (uncentered) training matrix,
/// computed by Hestenes one-sided Jacobi: plane rotations orthogonalize the
/// columns of a working copy while the same rotations accumulate into V.
inline SvdProjector fit_svd(const Matrix& train, int rank, Space fitted_on = Space::kAudio) {
  if (train.empty()) throw ValidationError("fit_svd: empty matrix");
  const std::size_t m = train.rows, n = train.cols;
  if (rank < 1 || static_cast<std::size_t>(rank) > std::min(m, n))
    throw ValidationError("fit_svd: rank " + std::to_string(rank) + " out of range for " +
                          std::to_string(m) + "x" + std::to_string(n) + " matrix");

  // Column-major working copy for cache-friendly column ops.
  std::vector<std::vector<double>> a(n, std::vector<double>(m));
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) a[c][r] = train(r, c);
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < n; ++c) v[c][c] = 1.0;

  constexpr int kMaxSweeps = 60;
  constexpr double kTol = 1e-14;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
          alpha += a[p][r] * a[p][r];
          beta += a[q][r] * a[q][r];
          gamma += a[p][r] * a[q][r];
        }
        if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (std::size_t r = 0; r < m; ++r) {
          const double ap = a[p][r];
          a[p][r] = cs * ap - sn * a[q][r];
          a[q][r] = sn * ap + cs * a[q][r];
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vp = v[p][r];
          v[p][r] = cs * vp - sn * v[q][r];
          v[q][r] = sn * vp + cs * v[q][r];
        }
      }
    }
    if (!rotated) break;
  }

  // Order columns by singular value (column norm), descending; stable for ties.
  std::vector<std::size_t> order(n);
  std::vector<double> sigma(n);
  for (std::size_t c = 0; c < n; ++c) {
    order[c] = c;
    sigma[c] = norm(std::span<const double>(a[c].data(), m));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdProjector proj;
  proj.rank = rank;
  proj.fitted_on = fitted_on;
  proj.basis = Matrix(n, static_cast<std::size_t>(rank));
  for (int c = 0; c < rank; ++c) {
    const auto& col = v[order[static_cast<std::size_t>(c)]];
    for (std::size_t r = 0; r < n; ++r) proj.basis(r, static_cast<std::size_t>(c)) = col[r];
  }
  return proj;
}

inline std::vector<double> project(std::span<const double> embedding, const SvdProjector& proj) {
  if (embedding.size() != proj.basis.rows)
    throw ShapeError("project: embedding length " + std::to_string(embedding.size()) +
                     " != basis rows " + std::to_string(proj.basis.rows));
  std::vector<double> out(static_cast<std::size_t>(proj.rank), 0.0);
  for (std::size_t r = 0; r < proj.basis.rows; ++r) {
    const double x = embedding[r];
    if (x == 0.0) continue;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += x * proj.basis(r, c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tag matrix serialization (consumed by the autotag CLI)
//
// Layout: "ADSMTAGM1 <T> <k>\n", then for each tag a u32 length + UTF-8
// bytes, then the raw and ppmi matrices as float64, then a CRC32.
// ---------------------------------------------------------------------------

inline constexpr const char* kTagMatrixMagic = "ADSMTAGM1";

inline void save_tag_matrix(const TagMatrix& tm, const std::filesystem::path& path) {
  if (tm.tags.empty()) throw ValidationError("save_tag_matrix: empty tag matrix");
  std::string out = std::string(kTagMatrixMagic) + " " + std::to_string(tm.tag_count()) + " " +
                    std::to_string(tm.raw.cols) + "\n";
  for (const std::string& tag : tm.tags) {
    io::append_u32_le(out, static_cast<std::uint32_t>(tag.size()));
    out += tag;
  }
  for (double x : tm.raw.data) io::append_f64_le(out, x);
  for (double x : tm.ppmi.data) io::append_f64_le(out, x);
  io::append_u32_le(out, io::crc32(out.data(), out.size()));
  io::write_file(path, out);
}

inline TagMatrix load_tag_matrix(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string::npos) throw FormatError(path.string() + ": missing tag matrix header");
  std::istringstream header(bytes.substr(0, nl));
  std::string magic;
  std::size_t t = 0, k = 0;
  if (!(header >> magic >> t >> k) || magic != kTagMatrixMagic)
    throw FormatError(path.string() + ": bad tag matrix header");
  if (t == 0 || k == 0) throw FormatError(path.string() + ": zero dimension");
  if (bytes.size() < nl + 1 + 4) throw FormatError(path.string() + ": truncated file");

  const std::uint32_t stored =
      io::read_u32_le(reinterpret_cast<const unsigned char*>(bytes.data()) + bytes.size() - 4);
  if (stored != io::crc32(bytes.data(), bytes.size() - 4))
    throw FormatError(path.string() + ": checksum failure");

  TagMatrix tm;
  std::size_t off = nl + 1;
  const auto need = [&](std::size_t bytes_needed) {
    if (off + bytes_needed > bytes.size() - 4)
      throw FormatError(path.string() + ": truncated tag matrix payload");
  };
  for (std::size_t i = 0; i < t; ++i) {
    need(4);
    const std::uint32_t len =
        io::read_u32_le(reinterpret_cast<const unsigned char*>(bytes.data()) + off);
    off += 4;
    need(len);
    tm.tags.push_back(bytes.substr(off, len));
    off += len;
  }
  tm.raw = Matrix(t, k);
  tm.ppmi = Matrix(t, k);
  need(2 * t * k * 8);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + off;
  for (std::size_t i = 0; i < t * k; ++i, p += 8) tm.raw.data[i] = io::read_f64_le(p);
  for (std::size_t i = 0; i < t * k; ++i, p += 8) tm.ppmi.data[i] = io::read_f64_le(p);
  off += 2 * t * k * 8;
  if (off != bytes.size() - 4) throw FormatError(path.string() + ": trailing bytes");
  return tm;
}

}  // namespace adsm
