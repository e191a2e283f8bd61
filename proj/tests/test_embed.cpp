#include "adsm/embed.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "adsm/rng.hpp"
#include "test_util.hpp"

using namespace adsm;

namespace {

AudioWordVocabulary make_vocab(Matrix centroids) {
  AudioWordVocabulary v;
  v.norm_stats.mean.assign(centroids.cols, 0.0);
  v.norm_stats.std.assign(centroids.cols, 1.0);
  v.centroids = std::move(centroids);
  return v;
}

/// Independent recomputation of the clipped-cosine weighting, written
/// directly from the definition (long double accumulation).
std::vector<double> encode_oracle(std::span<const double> x, const Matrix& centroids) {
  std::vector<long double> sims(centroids.rows, 0.0L);
  long double total = 0.0L;
  long double xn = 0.0L;
  for (double v : x) xn += static_cast<long double>(v) * v;
  xn = sqrtl(xn);
  for (std::size_t j = 0; j < centroids.rows; ++j) {
    const auto c = centroids.row(j);
    long double dot = 0.0L, cn = 0.0L;
    for (std::size_t i = 0; i < c.size(); ++i) {
      dot += static_cast<long double>(x[i]) * c[i];
      cn += static_cast<long double>(c[i]) * c[i];
    }
    cn = sqrtl(cn);
    long double s = (xn == 0.0L || cn == 0.0L) ? 0.0L : dot / (xn * cn);
    if (s < 0.0L) s = 0.0L;
    sims[j] = s;
    total += s;
  }
  std::vector<double> out(centroids.rows, 0.0);
  if (total <= 0.0L) return out;  // callers avoid this branch in the oracle tests
  for (std::size_t j = 0; j < centroids.rows; ++j)
    out[j] = static_cast<double>(sims[j] / total);
  return out;
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix; the independent
/// oracle route for the SVD (eigenvectors of the Gram matrix are right
/// singular vectors of the data matrix).
void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& eigenvalues,
                  std::vector<std::vector<double>>& eigenvectors) {
  const std::size_t n = a.size();
  eigenvectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) eigenvectors[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-30) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = eigenvectors[i][p], viq = eigenvectors[i][q];
          eigenvectors[i][p] = c * vip - s * viq;
          eigenvectors[i][q] = s * vip + c * viq;
        }
      }
    }
  }
  eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a[i][i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Window encoding
// ---------------------------------------------------------------------------

TEST_CASE("encode: exact centroid match with orthogonal others gets weight 1") {
  Matrix centroids(3, 3, 0.0);
  centroids(0, 0) = 1.0;  // e1
  centroids(1, 1) = 1.0;  // e2
  centroids(2, 2) = 1.0;  // e3
  const std::vector<double> x{0.0, 2.0, 0.0};  // parallel to centroid 1
  const auto w = encode_window(x, centroids);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == 1.0);
  CHECK(w[2] == 0.0);
}

TEST_CASE("encode: symmetric between two equally similar centroids") {
  Matrix centroids(3, 4, 0.0);
  centroids(0, 0) = 1.0;
  centroids(1, 1) = 1.0;
  centroids(2, 2) = 1.0;
  const std::vector<double> x{1.0, 1.0, 0.0, 0.0};  // equal cosine to 0 and 1
  const auto w = encode_window(x, centroids);
  CHECK_THAT(w[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
  CHECK_THAT(w[1], Catch::Matchers::WithinAbs(0.5, 1e-12));
  CHECK(w[2] == 0.0);
}

TEST_CASE("encode: matches independent recomputation on random inputs") {
  Rng rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix centroids = testutil::random_matrix(5, 7, rng);
    std::vector<double> x(7);
    for (double& v : x) v = rng.next_double() + 0.05;  // keeps some similarity positive
    const auto w = encode_window(x, centroids);
    const auto expected = encode_oracle(x, centroids);
    double total = std::accumulate(expected.begin(), expected.end(), 0.0);
    if (total == 0.0) continue;
    for (std::size_t j = 0; j < w.size(); ++j)
      REQUIRE(std::abs(w[j] - expected[j]) < 1e-12);
    REQUIRE(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) < 1e-9);
  }
}

TEST_CASE("encode: all-nonpositive similarities hard-assign to nearest centroid") {
  Matrix centroids(2, 2);
  centroids(0, 0) = -1.0; centroids(0, 1) = 0.0;
  centroids(1, 0) = -3.0; centroids(1, 1) = 0.0;
  const std::vector<double> x{1.0, 0.0};  // cosine -1 to both
  const auto w = encode_window(x, centroids);
  CHECK(w == std::vector<double>{1.0, 0.0});  // centroid 0 is nearer
}

TEST_CASE("encode: zero vector hard-assigns to nearest centroid") {
  Matrix centroids(2, 2);
  centroids(0, 0) = 5.0; centroids(0, 1) = 5.0;
  centroids(1, 0) = 1.0; centroids(1, 1) = 1.0;
  const std::vector<double> x{0.0, 0.0};
  const auto w = encode_window(x, centroids);
  CHECK(w == std::vector<double>{0.0, 1.0});
}

TEST_CASE("encode: hard mode always one-hot") {
  Rng rng(11);
  const Matrix centroids = testutil::random_matrix(6, 3, rng);
  const std::vector<double> x{0.3, -0.2, 0.9};
  const auto w = encode_window(x, centroids, Encoding::kHard);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == 1.0);
  CHECK(*std::max_element(w.begin(), w.end()) == 1.0);
}

// ---------------------------------------------------------------------------
// AUDIO clip embeddings
// ---------------------------------------------------------------------------

TEST_CASE("audio embedding: single window equals its encoding, two windows average") {
  Rng rng(21);
  const AudioWordVocabulary vocab = make_vocab(testutil::random_matrix(4, 3, rng));
  Matrix one(1, 3);
  for (std::size_t c = 0; c < 3; ++c) one(0, c) = 0.2 + 0.1 * static_cast<double>(c);
  const auto e_single = clip_audio_embedding("x", one, vocab);
  const auto direct = encode_window(one.row(0), vocab.centroids);
  CHECK(e_single.values == direct);
  CHECK(e_single.space == Space::kAudio);

  Matrix two(2, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    two(0, c) = 0.5 + 0.2 * static_cast<double>(c);
    two(1, c) = 1.0 - 0.3 * static_cast<double>(c);
  }
  const auto e1 = encode_window(two.row(0), vocab.centroids);
  const auto e2 = encode_window(two.row(1), vocab.centroids);
  const auto e_pair = clip_audio_embedding("y", two, vocab);
  for (std::size_t j = 0; j < 4; ++j)
    REQUIRE(e_pair.values[j] == (e1[j] + e2[j]) / 2.0);
}

TEST_CASE("audio embedding: stays on the probability simplex") {
  Rng rng(33);
  const AudioWordVocabulary vocab = make_vocab(testutil::random_matrix(6, 5, rng));
  const Matrix features = testutil::random_matrix(20, 5, rng);
  const auto emb = clip_audio_embedding("z", features, vocab);
  double sum = 0.0;
  for (double v : emb.values) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

// ---------------------------------------------------------------------------
// Tag matrix and PPMI
// ---------------------------------------------------------------------------

TEST_CASE("tag matrix: rows are hand-computed means of clip embeddings") {
  Corpus corpus;
  corpus.add_clip({"c1", {}, {"rock"}});
  corpus.add_clip({"c2", {}, {"rock", "loud"}});
  corpus.add_clip({"c3", {}, {"jazz"}});
  corpus.add_clip({"c4", {}, {"jazz", "loud"}});

  std::vector<ClipEmbedding> embs = {
      {"c1", Space::kAudio, {1.0, 0.0, 0.0}},
      {"c2", Space::kAudio, {0.0, 1.0, 0.0}},
      {"c3", Space::kAudio, {0.0, 0.0, 1.0}},
      {"c4", Space::kAudio, {0.5, 0.25, 0.25}},
  };
  const TagMatrix tm = build_tag_matrix(embs, corpus);
  REQUIRE(tm.tags == std::vector<std::string>{"jazz", "loud", "rock"});

  // jazz = mean(c3, c4); loud = mean(c2, c4); rock = mean(c1, c2)
  const std::vector<double> jazz{0.25, 0.125, 0.625};
  const std::vector<double> loud{0.25, 0.625, 0.125};
  const std::vector<double> rock{0.5, 0.5, 0.0};
  for (std::size_t j = 0; j < 3; ++j) {
    REQUIRE(tm.raw(0, j) == jazz[j]);
    REQUIRE(tm.raw(1, j) == loud[j]);
    REQUIRE(tm.raw(2, j) == rock[j]);
  }
}

TEST_CASE("tag matrix: single-clip tag copies that embedding; identical sets match") {
  Corpus corpus;
  corpus.add_clip({"a", {}, {"solo", "dup1", "dup2"}});
  corpus.add_clip({"b", {}, {"dup1", "dup2"}});
  std::vector<ClipEmbedding> embs = {
      {"a", Space::kAudio, {0.7, 0.3}},
      {"b", Space::kAudio, {0.1, 0.9}},
  };
  const TagMatrix tm = build_tag_matrix(embs, corpus);
  const auto solo = tm.index_of("solo");
  REQUIRE(solo.has_value());
  CHECK(tm.raw(*solo, 0) == 0.7);
  CHECK(tm.raw(*solo, 1) == 0.3);

  const auto d1 = tm.index_of("dup1");
  const auto d2 = tm.index_of("dup2");
  for (std::size_t j = 0; j < 2; ++j) {
    REQUIRE(tm.raw(*d1, j) == tm.raw(*d2, j));
    REQUIRE(tm.ppmi(*d1, j) == tm.ppmi(*d2, j));
  }
}

TEST_CASE("ppmi: uniform matrix maps to all zeros") {
  Matrix raw(3, 4, 0.25);
  const Matrix out = ppmi_weight(raw);
  for (double v : out.data) REQUIRE(std::abs(v) < 1e-12);
}

TEST_CASE("ppmi: 2x2 identity gives log 2 on the diagonal") {
  Matrix raw(2, 2, 0.0);
  raw(0, 0) = 1.0;
  raw(1, 1) = 1.0;
  const Matrix out = ppmi_weight(raw);
  CHECK_THAT(out(0, 0), Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
  CHECK_THAT(out(1, 1), Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
  CHECK(out(0, 1) == 0.0);
  CHECK(out(1, 0) == 0.0);
}

TEST_CASE("ppmi: non-negative, zero-preserving, scale-invariant") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix raw = testutil::random_matrix(3 + rng.below(6), 3 + rng.below(8), rng, 0.0, 2.0);
    for (std::size_t i = 0; i < raw.data.size(); i += 3) raw.data[i] = 0.0;  // plant zeros
    if (std::accumulate(raw.data.begin(), raw.data.end(), 0.0) == 0.0) continue;
    const Matrix out = ppmi_weight(raw);
    Matrix scaled = raw;
    for (double& v : scaled.data) v *= 37.5;
    const Matrix out_scaled = ppmi_weight(scaled);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      REQUIRE(out.data[i] >= 0.0);
      if (raw.data[i] == 0.0) REQUIRE(out.data[i] == 0.0);
      REQUIRE(std::abs(out.data[i] - out_scaled.data[i]) < 1e-9);
    }
  }
}

TEST_CASE("ppmi: all-zero matrix is an error") {
  CHECK_THROWS_AS(ppmi_weight(Matrix(2, 2, 0.0)), ValidationError);
}

// ---------------------------------------------------------------------------
// Semantic embeddings and fusion
// ---------------------------------------------------------------------------

TEST_CASE("semantic embedding: one tag copies the PPMI row, two tags average") {
  TagMatrix tm;
  tm.tags = {"alpha", "beta"};
  tm.raw = Matrix(2, 3, 1.0);
  tm.ppmi = Matrix(2, 3);
  for (std::size_t j = 0; j < 3; ++j) {
    tm.ppmi(0, j) = static_cast<double>(j);
    tm.ppmi(1, j) = 1.0 - static_cast<double>(j);
  }
  const auto one = semantic_clip_embedding({"alpha"}, tm);
  for (std::size_t j = 0; j < 3; ++j) REQUIRE(one[j] == tm.ppmi(0, j));

  const auto two = semantic_clip_embedding({"alpha", "beta"}, tm);
  for (std::size_t j = 0; j < 3; ++j)
    REQUIRE(two[j] == (tm.ppmi(0, j) + tm.ppmi(1, j)) / 2.0);
}

TEST_CASE("semantic embedding: empty tag list raises NoTagsError") {
  TagMatrix tm;
  tm.tags = {"a"};
  tm.raw = Matrix(1, 2, 1.0);
  tm.ppmi = Matrix(1, 2, 0.5);
  CHECK_THROWS_AS(semantic_clip_embedding({}, tm), NoTagsError);
  CHECK_THROWS_AS(semantic_clip_embedding({"unknown"}, tm), ResolutionError);
}

TEST_CASE("fuse: boundary weights reproduce the inputs exactly") {
  ClipEmbedding audio{"c", Space::kAudio, {0.25, 0.75}};
  ClipEmbedding sem{"c", Space::kAdsm, {2.0, 3.0}};
  const auto at0 = fuse(audio, sem, {0.0, FusionMode::kAverage});
  CHECK(at0.values == audio.values);
  const auto at1 = fuse(audio, sem, {1.0, FusionMode::kAverage});
  CHECK(at1.values == sem.values);
}

TEST_CASE("fuse: direct formula checks, average and concatenate") {
  ClipEmbedding audio{"c", Space::kAudio, {0.0, 1.0}};
  ClipEmbedding sem{"c", Space::kAdsm, {1.0, 0.0}};
  const auto avg = fuse(audio, sem, {0.9, FusionMode::kAverage});
  CHECK_THAT(avg.values[0], Catch::Matchers::WithinAbs(0.9, 1e-15));
  CHECK_THAT(avg.values[1], Catch::Matchers::WithinAbs(0.1, 1e-15));
  CHECK(avg.space == Space::kFusion);

  const auto cat = fuse(audio, sem, {0.9, FusionMode::kConcatenate});
  REQUIRE(cat.values.size() == 4);
  CHECK_THAT(cat.values[0], Catch::Matchers::WithinAbs(0.9, 1e-15));
  CHECK(cat.values[1] == 0.0);
  CHECK(cat.values[2] == 0.0);
  CHECK_THAT(cat.values[3], Catch::Matchers::WithinAbs(0.1, 1e-15));
}

TEST_CASE("fuse: length mismatch in average mode is a shape error") {
  ClipEmbedding audio{"c", Space::kAudio, {1.0, 0.0}};
  ClipEmbedding sem{"c", Space::kAdsm, {1.0, 0.0, 0.0}};
  CHECK_THROWS_AS(fuse(audio, sem, {0.5, FusionMode::kAverage}), ShapeError);
  CHECK_NOTHROW(fuse(audio, sem, {0.5, FusionMode::kConcatenate}));
}

TEST_CASE("fuse: concatenation cosine matches direct recomputation at w=0.5") {
  Rng rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    ClipEmbedding a1{"a", Space::kAudio, {}}, a2{"b", Space::kAudio, {}};
    ClipEmbedding s1{"a", Space::kAdsm, {}}, s2{"b", Space::kAdsm, {}};
    for (int i = 0; i < 6; ++i) {
      a1.values.push_back(rng.next_double());
      a2.values.push_back(rng.next_double());
      s1.values.push_back(rng.next_double());
      s2.values.push_back(rng.next_double());
    }
    const auto f1 = fuse(a1, s1, {0.5, FusionMode::kConcatenate});
    const auto f2 = fuse(a2, s2, {0.5, FusionMode::kConcatenate});
    // direct recomputation from the parts
    const double num = 0.25 * (dot(s1.values, s2.values) + dot(a1.values, a2.values));
    const double den = std::sqrt(0.25 * (dot(s1.values, s1.values) + dot(a1.values, a1.values))) *
                       std::sqrt(0.25 * (dot(s2.values, s2.values) + dot(a2.values, a2.values)));
    REQUIRE(std::abs(cosine(f1.values, f2.values) - num / den) < 1e-12);
  }
}

// ---------------------------------------------------------------------------
// SVD projection
// ---------------------------------------------------------------------------

TEST_CASE("svd: basis columns orthonormal; projection matches Gram eigensolver oracle") {
  Rng rng(808);
  const Matrix train = testutil::random_matrix(20, 8, rng);
  const SvdProjector proj = fit_svd(train, 4);

  REQUIRE(proj.basis.rows == 8);
  REQUIRE(proj.basis.cols == 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double d = 0.0;
      for (std::size_t r = 0; r < 8; ++r) d += proj.basis(r, i) * proj.basis(r, j);
      REQUIRE(std::abs(d - (i == j ? 1.0 : 0.0)) < 1e-6);
    }

  // oracle: eigenvectors of the Gram matrix A^T A
  std::vector<std::vector<double>> gram(8, std::vector<double>(8, 0.0));
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      for (std::size_t r = 0; r < 20; ++r) gram[i][j] += train(r, i) * train(r, j);
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenvectors;
  jacobi_eigen(gram, eigenvalues, eigenvectors);
  std::vector<std::size_t> order(8);
  for (std::size_t i = 0; i < 8; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return eigenvalues[x] > eigenvalues[y]; });

  // compare projections of every training row, allowing per-column sign flips
  for (std::size_t c = 0; c < 4; ++c) {
    const std::size_t oc = order[c];
    double ref = 0.0, impl = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      ref += train(0, i) * eigenvectors[i][oc];
      impl += train(0, i) * proj.basis(i, c);
    }
    const double sign = (ref < 0) == (impl < 0) ? 1.0 : -1.0;
    for (std::size_t r = 0; r < 20; ++r) {
      double pr = 0.0, pi = 0.0;
      for (std::size_t i = 0; i < 8; ++i) {
        pr += train(r, i) * eigenvectors[i][oc];
        pi += train(r, i) * proj.basis(i, c);
      }
      REQUIRE(std::abs(pi - sign * pr) < 1e-6);
    }
  }
}

TEST_CASE("svd: full-rank projection preserves pairwise cosine similarity") {
  Rng rng(909);
  const Matrix train = testutil::random_matrix(15, 6, rng, 0.0, 1.0);
  const SvdProjector proj = fit_svd(train, 6);
  std::vector<std::vector<double>> projected;
  for (std::size_t r = 0; r < train.rows; ++r)
    projected.push_back(project(train.row(r), proj));
  for (std::size_t i = 0; i < train.rows; ++i)
    for (std::size_t j = i + 1; j < train.rows; ++j)
      REQUIRE(std::abs(cosine(train.row(i), train.row(j)) -
                       cosine(projected[i], projected[j])) < 1e-9);
}

TEST_CASE("svd: rank-1 matrix reconstructs exactly at rank 1") {
  Rng rng(13);
  std::vector<double> direction(5);
  for (double& v : direction) v = rng.next_double() + 0.1;
  Matrix train(10, 5);
  for (std::size_t r = 0; r < 10; ++r) {
    const double scale = 0.5 + rng.next_double();
    for (std::size_t c = 0; c < 5; ++c) train(r, c) = scale * direction[c];
  }
  const SvdProjector proj = fit_svd(train, 1);
  // reconstruction through the rank-1 basis must reproduce each row
  for (std::size_t r = 0; r < 10; ++r) {
    const auto p = project(train.row(r), proj);
    for (std::size_t c = 0; c < 5; ++c) {
      double recon = p[0] * proj.basis(c, 0);
      REQUIRE(std::abs(recon - train(r, c)) < 1e-9);
    }
  }
}

TEST_CASE("svd: rank out of range errors") {
  Matrix train(3, 5, 1.0);
  CHECK_THROWS_AS(fit_svd(train, 4), ValidationError);  // rank > min(3,5)
  CHECK_THROWS_AS(fit_svd(train, 0), ValidationError);
  CHECK_THROWS_AS(project(std::vector<double>(4, 0.0), fit_svd(train, 2)), ShapeError);
}
