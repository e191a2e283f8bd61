#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "adsm/corpus.hpp"
#include "adsm/embed.hpp"
#include "adsm/error.hpp"
#include "adsm/features.hpp"
#include "adsm/io.hpp"
#include "adsm/log.hpp"
#include "adsm/matrix.hpp"
#include "adsm/parallel.hpp"
#include "adsm/tagger.hpp"
#include "adsm/vocab.hpp"

namespace adsm {

// ---------------------------------------------------------------------------
// Feature access
// ---------------------------------------------------------------------------

/// Raw (unnormalized) per-clip feature matrices, keyed by clip id.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual Matrix features(const std::string& clip_id) const = 0;
};

/// Reads <clip_id>.fv files from a directory on every call.
class DirectoryFeatureSource : public FeatureSource {
 public:
  explicit DirectoryFeatureSource(std::filesystem::path dir) : dir_(std::move(dir)) {}

  Matrix features(const std::string& clip_id) const override {
    return io::import_features(dir_ / (clip_id + ".fv"));
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

class InMemoryFeatureSource : public FeatureSource {
 public:
  explicit InMemoryFeatureSource(std::map<std::string, Matrix> features)
      : features_(std::move(features)) {}

  Matrix features(const std::string& clip_id) const override {
    const auto it = features_.find(clip_id);
    if (it == features_.end())
      throw ResolutionError("no features for clip '" + clip_id + "'");
    return it->second;
  }

 private:
  std::map<std::string, Matrix> features_;
};

// ---------------------------------------------------------------------------
// Method specification
// ---------------------------------------------------------------------------

enum class NormScope { kFoldTrain, kGlobal };

inline const char* to_string(NormScope s) {
  return s == NormScope::kFoldTrain ? "fold-train" : "global";
}

inline NormScope parse_norm_scope(const std::string& name) {
  if (name == "fold-train") return NormScope::kFoldTrain;
  if (name == "global") return NormScope::kGlobal;
  throw ValidationError("unknown norm scope: " + name);
}

enum class UntaggedPolicy { kAutotag, kSkip };

inline const char* to_string(UntaggedPolicy p) {
  return p == UntaggedPolicy::kAutotag ? "autotag" : "skip";
}

inline UntaggedPolicy parse_untagged_policy(const std::string& name) {
  if (name == "autotag") return UntaggedPolicy::kAutotag;
  if (name == "skip") return UntaggedPolicy::kSkip;
  throw ValidationError("unknown untagged policy: " + name);
}

struct MethodSpec {
  Space space = Space::kAudio;
  std::string feature_kind = "mfccdd";  // "mfccdd" or "imported"; recorded in manifests
  int k = 300;
  std::optional<int> svd_rank;
  double w = 0.9;
  FusionMode fusion_mode = FusionMode::kAverage;
  int n_tags = 20;
  Encoding encoding = Encoding::kSoftCosine;
  int vocab_max_clips = 1000;
  int kmeans_max_iters = 100;
  double kmeans_tol = 1e-6;
  int kmeans_restarts = 1;
  NormScope norm_scope = NormScope::kFoldTrain;
  UntaggedPolicy adsm_untagged = UntaggedPolicy::kAutotag;

  void validate() const {
    if (k < 2) throw ValidationError("method: k must be >= 2");
    if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("method: w must be in [0,1]");
    if (n_tags < 1) throw ValidationError("method: n_tags must be >= 1");
    if (vocab_max_clips < 1) throw ValidationError("method: vocab_max_clips must be >= 1");
    if (svd_rank && *svd_rank < 1) throw ValidationError("method: svd rank must be >= 1");
    if (feature_kind != "mfccdd" && feature_kind != "imported")
      throw ValidationError("method: feature_kind must be 'mfccdd' or 'imported'");
  }

  bool uses_semantic() const { return space != Space::kAudio; }
  bool uses_autotag_semantics() const {
    return space == Space::kAdsmAutotag || space == Space::kFusionAutotag;
  }
  bool is_fusion() const { return space == Space::kFusion || space == Space::kFusionAutotag; }
};

// ---------------------------------------------------------------------------
// Constraint evaluation
// ---------------------------------------------------------------------------

using EmbeddingSet = std::map<std::string, std::vector<double>>;

/// A constraint (a,b,c) holds when clip b is closer to a than c is, under
/// cosine distance 1 - cos: cos(a,b) > cos(a,c). Exact ties count as
/// violations.
inline bool constraint_satisfied(const TripletConstraint& t, const EmbeddingSet& embeddings) {
  const auto find = [&](const std::string& id) -> const std::vector<double>& {
    const auto it = embeddings.find(id);
    if (it == embeddings.end()) throw ResolutionError("missing embedding for clip '" + id + "'");
    return it->second;
  };
  const auto& ea = find(t.a);
  const auto& eb = find(t.b);
  const auto& ec = find(t.c);
  return cosine(ea, eb) > cosine(ea, ec);
}

inline double accuracy(const std::vector<TripletConstraint>& constraints,
                       const EmbeddingSet& embeddings) {
  if (constraints.empty()) throw ValidationError("accuracy: empty constraint list");
  std::size_t satisfied = 0;
  for (const TripletConstraint& t : constraints)
    if (constraint_satisfied(t, embeddings)) ++satisfied;
  return static_cast<double>(satisfied) / static_cast<double>(constraints.size());
}

// ---------------------------------------------------------------------------
// Per-fold pipeline
// ---------------------------------------------------------------------------

/// Which clips fed each training stage; evaluate_fold/run_fold assert that
/// none of them is a test clip.
struct FoldAudit {
  std::set<std::string> vocab_clips;
  std::set<std::string> norm_clips;
  std::set<std::string> tag_clips;
  std::set<std::string> svd_clips;
  std::set<std::string> test_clips;
};

struct FoldContext {
  MethodSpec method;
  std::uint64_t seed = 0;
  AudioWordVocabulary vocab;
  std::optional<TagMatrix> tags;
  std::optional<SvdProjector> svd;
  EmbeddingSet test_audio;       // k-dim AUDIO embeddings of test clips
  EmbeddingSet test_embeddings;  // final method-space embeddings (post SVD)
  std::set<std::string> skipped_clips;  // untagged test clips under the skip policy
  FoldAudit audit;
};

struct FoldEval {
  double accuracy = 0.0;
  std::size_t satisfied = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::vector<int> verdicts;  // per test constraint: 1 satisfied, 0 violated, -1 skipped
};

namespace eval_detail {

inline std::vector<double> semantic_for_clip(const std::string& clip_id,
                                             const std::vector<double>& audio_embedding,
                                             const Corpus& corpus, const TagMatrix& tm,
                                             const MethodSpec& method, bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  if (method.uses_autotag_semantics())
    return semantic_clip_embedding(autotag_names(audio_embedding, tm, method.n_tags), tm);

  // Groundtruth-tag path: keep only tags that exist in the training matrix.
  std::vector<std::string> usable;
  for (const std::string& tag : corpus.clip(clip_id).tags) {
    if (tm.index_of(tag)) {
      usable.push_back(tag);
    } else {
      log::warn("clip ", clip_id, ": tag '", tag, "' absent from training tag matrix; ignored");
    }
  }
  if (usable.empty()) {
    if (method.adsm_untagged == UntaggedPolicy::kSkip)
      throw NoTagsError("clip " + clip_id + " has no usable tags");
    log::warn("clip ", clip_id, ": no usable tags; falling back to auto-tagging");
    if (used_fallback) *used_fallback = true;
    return semantic_clip_embedding(autotag_names(audio_embedding, tm, method.n_tags), tm);
  }
  return semantic_clip_embedding(usable, tm);
}

inline ClipEmbedding method_space_embedding(const std::string& clip_id,
                                            std::vector<double> audio_values,
                                            std::vector<double> semantic_values,
                                            const MethodSpec& method) {
  ClipEmbedding audio{clip_id, Space::kAudio, std::move(audio_values)};
  switch (method.space) {
    case Space::kAudio:
      return audio;
    case Space::kAdsm:
      return {clip_id, Space::kAdsm, std::move(semantic_values)};
    case Space::kAdsmAutotag:
      return {clip_id, Space::kAdsmAutotag, std::move(semantic_values)};
    case Space::kFusion: {
      ClipEmbedding sem{clip_id, Space::kAdsm, std::move(semantic_values)};
      return fuse(audio, sem, {method.w, method.fusion_mode});
    }
    case Space::kFusionAutotag: {
      ClipEmbedding sem{clip_id, Space::kAdsmAutotag, std::move(semantic_values)};
      return fuse(audio, sem, {method.w, method.fusion_mode});
    }
  }
  throw ValidationError("unknown space");
}

}  // namespace eval_detail

/// Run the training side of one fold: sample vocabulary clips from the
/// training set, fit normalization, train the audio-word vocabulary, build
/// training AUDIO embeddings and the tag matrix, optionally fit the SVD,
/// then embed the fold's test clips in the method space. Training
/// constraints are never consulted; the method is unsupervised.
inline FoldContext build_fold_context(const Corpus& corpus, const FeatureSource& features,
                                      const FoldAssignment& fold, const MethodSpec& method,
                                      std::uint64_t seed, unsigned workers = 1) {
  method.validate();
  FoldContext ctx;
  ctx.method = method;
  ctx.seed = seed;
  ctx.audit.test_clips = test_clip_ids(fold);

  const std::vector<std::string> train_ids = train_clip_ids(corpus, fold);
  if (train_ids.empty()) throw ValidationError("fold has no training clips");

  // 1. Vocabulary clip sample.
  const std::vector<std::string> vocab_ids = sample_training_clips(
      train_ids, static_cast<std::size_t>(method.vocab_max_clips), seed);
  ctx.audit.vocab_clips.insert(vocab_ids.begin(), vocab_ids.end());

  // 2. Normalization statistics.
  std::vector<Matrix> pool_parts;
  pool_parts.reserve(vocab_ids.size());
  for (const std::string& id : vocab_ids) pool_parts.push_back(features.features(id));

  NormalizationStats stats;
  if (method.norm_scope == NormScope::kFoldTrain) {
    stats = fit_normalization(pool_parts);
    ctx.audit.norm_clips.insert(vocab_ids.begin(), vocab_ids.end());
  } else {
    std::vector<Matrix> all_parts;
    all_parts.reserve(corpus.clip_count());
    for (const auto& [id, clip] : corpus.clips()) all_parts.push_back(features.features(id));
    stats = fit_normalization(all_parts);
    for (const auto& [id, clip] : corpus.clips()) ctx.audit.norm_clips.insert(id);
  }

  // 3. Audio-word vocabulary from the pooled, normalized windows.
  std::vector<Matrix> normalized_pool;
  normalized_pool.reserve(pool_parts.size());
  for (const Matrix& part : pool_parts) normalized_pool.push_back(apply_normalization(part, stats));
  pool_parts.clear();
  const Matrix pooled = Matrix::vstack(normalized_pool);
  normalized_pool.clear();

  VocabTrainConfig vcfg;
  vcfg.k = method.k;
  vcfg.max_clips = method.vocab_max_clips;
  vcfg.max_iters = method.kmeans_max_iters;
  vcfg.tol = method.kmeans_tol;
  vcfg.seed = seed;
  vcfg.restarts = method.kmeans_restarts;
  ctx.vocab = train_vocabulary(pooled, vcfg, stats, workers);

  // 4. Training AUDIO embeddings (parallel per clip, merged in id order).
  std::vector<ClipEmbedding> train_audio(train_ids.size());
  parallel::for_each_index(train_ids.size(), workers, [&](std::size_t i) {
    const Matrix m = apply_normalization(features.features(train_ids[i]), stats);
    train_audio[i] = clip_audio_embedding(train_ids[i], m, ctx.vocab, method.encoding);
  });

  // 5. Tag matrix from training annotations (PPMI applied inside).
  std::vector<ClipEmbedding> tagged_train;
  for (const ClipEmbedding& e : train_audio)
    if (!corpus.clip(e.clip_id).tags.empty()) tagged_train.push_back(e);
  if (!tagged_train.empty()) {
    ctx.tags = build_tag_matrix(tagged_train, corpus);
    for (const ClipEmbedding& e : tagged_train) ctx.audit.tag_clips.insert(e.clip_id);
  } else if (method.uses_semantic()) {
    throw ValidationError("method " + std::string(to_string(method.space)) +
                          " requires tagged training clips, found none");
  }

  // 6. Optional SVD fit on the training embeddings in the method space.
  if (method.svd_rank) {
    std::vector<std::vector<double>> rows;
    rows.reserve(train_audio.size());
    for (const ClipEmbedding& e : train_audio) {
      if (method.space == Space::kAudio) {
        rows.push_back(e.values);
        ctx.audit.svd_clips.insert(e.clip_id);
        continue;
      }
      std::vector<double> semantic;
      try {
        semantic = eval_detail::semantic_for_clip(e.clip_id, e.values, corpus, *ctx.tags, method,
                                                  nullptr);
      } catch (const NoTagsError&) {
        log::debug("svd fit: skipping untagged training clip ", e.clip_id);
        continue;
      }
      rows.push_back(
          eval_detail::method_space_embedding(e.clip_id, e.values, std::move(semantic), method)
              .values);
      ctx.audit.svd_clips.insert(e.clip_id);
    }
    if (rows.empty()) throw ValidationError("svd fit: no usable training embeddings");
    Matrix fit_matrix(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      std::copy(rows[r].begin(), rows[r].end(), fit_matrix.row(r).begin());
    ctx.svd = fit_svd(fit_matrix, *method.svd_rank, method.space);
  }

  // 7. Test-clip embeddings in the method space.
  const std::vector<std::string> test_ids(ctx.audit.test_clips.begin(),
                                          ctx.audit.test_clips.end());
  std::vector<std::vector<double>> test_audio_values(test_ids.size());
  parallel::for_each_index(test_ids.size(), workers, [&](std::size_t i) {
    const Matrix m = apply_normalization(features.features(test_ids[i]), stats);
    test_audio_values[i] =
        clip_audio_embedding(test_ids[i], m, ctx.vocab, method.encoding).values;
  });

  for (std::size_t i = 0; i < test_ids.size(); ++i) {
    const std::string& id = test_ids[i];
    ctx.test_audio[id] = test_audio_values[i];
    std::vector<double> semantic;
    if (method.uses_semantic()) {
      try {
        semantic = eval_detail::semantic_for_clip(id, test_audio_values[i], corpus, *ctx.tags,
                                                  method, nullptr);
      } catch (const NoTagsError&) {
        log::warn("clip ", id, ": skipped (no usable tags, policy=skip)");
        ctx.skipped_clips.insert(id);
        continue;
      }
    }
    ClipEmbedding final_emb = eval_detail::method_space_embedding(
        id, std::move(test_audio_values[i]), std::move(semantic), method);
    if (ctx.svd) final_emb.values = project(final_emb.values, *ctx.svd);
    ctx.test_embeddings[id] = std::move(final_emb.values);
  }

  // Leakage check: no test clip may have fed a training stage.
  const auto assert_disjoint = [&](const std::set<std::string>& used, const char* stage) {
    for (const std::string& id : used)
      if (ctx.audit.test_clips.count(id))
        throw ValidationError(std::string("leakage: test clip '") + id + "' used in " + stage);
  };
  assert_disjoint(ctx.audit.vocab_clips, "vocabulary sampling");
  assert_disjoint(ctx.audit.tag_clips, "tag matrix construction");
  assert_disjoint(ctx.audit.svd_clips, "svd fitting");
  if (method.norm_scope == NormScope::kFoldTrain)
    assert_disjoint(ctx.audit.norm_clips, "normalization fitting");

  return ctx;
}

/// Evaluate a fold's test constraints against prepared embeddings.
/// Constraints touching a skipped clip are excluded from the denominator.
inline FoldEval evaluate_fold(const FoldContext& ctx,
                              const std::vector<TripletConstraint>& test_constraints) {
  if (test_constraints.empty()) throw ValidationError("evaluate_fold: no test constraints");
  FoldEval out;
  out.verdicts.reserve(test_constraints.size());
  for (const TripletConstraint& t : test_constraints) {
    if (ctx.skipped_clips.count(t.a) || ctx.skipped_clips.count(t.b) ||
        ctx.skipped_clips.count(t.c)) {
      out.verdicts.push_back(-1);
      ++out.skipped;
      continue;
    }
    const bool ok = constraint_satisfied(t, ctx.test_embeddings);
    out.verdicts.push_back(ok ? 1 : 0);
    ++out.evaluated;
    if (ok) ++out.satisfied;
  }
  if (out.evaluated == 0) throw ValidationError("evaluate_fold: every test constraint skipped");
  out.accuracy = static_cast<double>(out.satisfied) / static_cast<double>(out.evaluated);
  return out;
}

inline FoldEval run_fold(const Corpus& corpus, const FeatureSource& features,
                         const FoldAssignment& fold, const MethodSpec& method, std::uint64_t seed,
                         unsigned workers = 1) {
  const FoldContext ctx = build_fold_context(corpus, features, fold, method, seed, workers);
  return evaluate_fold(ctx, fold.test_constraints);
}

// ---------------------------------------------------------------------------
// Cross-validation and sweeps
// ---------------------------------------------------------------------------

struct EvalResult {
  MethodSpec method;
  int repeats = 0;
  std::size_t fold_count = 0;
  std::vector<std::uint64_t> seeds;            // one per repeat: base_seed + index
  std::vector<std::vector<double>> accuracies;  // [repeat][fold]

  double mean_accuracy() const {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& rep : accuracies)
      for (double a : rep) {
        acc += a;
        ++n;
      }
    return n ? acc / static_cast<double>(n) : 0.0;
  }

  std::vector<double> per_fold_mean() const {
    std::vector<double> out(fold_count, 0.0);
    if (accuracies.empty()) return out;
    for (const auto& rep : accuracies)
      for (std::size_t f = 0; f < fold_count; ++f) out[f] += rep[f];
    for (double& v : out) v /= static_cast<double>(accuracies.size());
    return out;
  }
};

/// Repeated cross-validation. Each repeat reseeds both the vocabulary clip
/// sample and the k-means initialization with base_seed + repeat index.
inline EvalResult run_cv(const Corpus& corpus, const FeatureSource& features,
                         const MethodSpec& method, int repeats, std::uint64_t base_seed,
                         unsigned workers = 1) {
  if (repeats < 1) throw ValidationError("run_cv: repeats must be >= 1");
  if (corpus.folds.empty()) throw ValidationError("run_cv: corpus has no folds");
  EvalResult result;
  result.method = method;
  result.repeats = repeats;
  result.fold_count = corpus.folds.size();
  for (int r = 0; r < repeats; ++r) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
    result.seeds.push_back(seed);
    std::vector<double> fold_acc;
    fold_acc.reserve(corpus.folds.size());
    for (const FoldAssignment& fold : corpus.folds)
      fold_acc.push_back(run_fold(corpus, features, fold, method, seed, workers).accuracy);
    result.accuracies.push_back(std::move(fold_acc));
  }
  return result;
}

enum class SweepAxis { kW, kNTags, kK, kSvdRank, kVocabClips };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kW: return "w";
    case SweepAxis::kNTags: return "n-tags";
    case SweepAxis::kK: return "k";
    case SweepAxis::kSvdRank: return "svd-rank";
    case SweepAxis::kVocabClips: return "vocab-clips";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "w") return SweepAxis::kW;
  if (name == "n-tags") return SweepAxis::kNTags;
  if (name == "k") return SweepAxis::kK;
  if (name == "svd-rank") return SweepAxis::kSvdRank;
  if (name == "vocab-clips") return SweepAxis::kVocabClips;
  throw ValidationError("unknown sweep axis: " + name);
}

inline MethodSpec with_axis_value(MethodSpec method, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::kW: method.w = value; break;
    case SweepAxis::kNTags: method.n_tags = static_cast<int>(value); break;
    case SweepAxis::kK: method.k = static_cast<int>(value); break;
    case SweepAxis::kSvdRank: method.svd_rank = static_cast<int>(value); break;
    case SweepAxis::kVocabClips: method.vocab_max_clips = static_cast<int>(value); break;
  }
  return method;
}

/// One EvalResult per axis value, in the given order.
inline std::vector<std::pair<double, EvalResult>> sweep(const Corpus& corpus,
                                                        const FeatureSource& features,
                                                        const MethodSpec& base, SweepAxis axis,
                                                        const std::vector<double>& values,
                                                        int repeats, std::uint64_t base_seed,
                                                        unsigned workers = 1) {
  if (values.empty()) throw ValidationError("sweep: no axis values");
  std::vector<std::pair<double, EvalResult>> out;
  out.reserve(values.size());
  for (double v : values)
    out.emplace_back(v,
                     run_cv(corpus, features, with_axis_value(base, axis, v), repeats, base_seed,
                            workers));
  return out;
}

// ---------------------------------------------------------------------------
// CSV output (fixed formatting so reruns are byte-identical)
// ---------------------------------------------------------------------------

namespace eval_detail {

inline std::string format_accuracy(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", a);
  return buf;
}

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace eval_detail

inline void write_results_csv(std::ostream& out, const EvalResult& result) {
  out << "method,repeat,fold,accuracy\n";
  const char* name = to_string(result.method.space);
  for (std::size_t r = 0; r < result.accuracies.size(); ++r)
    for (std::size_t f = 0; f < result.accuracies[r].size(); ++f)
      out << name << ',' << r << ',' << f << ','
          << eval_detail::format_accuracy(result.accuracies[r][f]) << '\n';
  out << name << ",mean,mean," << eval_detail::format_accuracy(result.mean_accuracy()) << '\n';
}

inline void write_sweep_csv(std::ostream& out, SweepAxis axis,
                            const std::vector<std::pair<double, EvalResult>>& table) {
  out << "axis,value,repeat,fold,accuracy\n";
  const char* axis_name = to_string(axis);
  for (const auto& [value, result] : table) {
    const std::string v = eval_detail::format_value(value);
    for (std::size_t r = 0; r < result.accuracies.size(); ++r)
      for (std::size_t f = 0; f < result.accuracies[r].size(); ++f)
        out << axis_name << ',' << v << ',' << r << ',' << f << ','
            << eval_detail::format_accuracy(result.accuracies[r][f]) << '\n';
    out << axis_name << ',' << v << ",mean,mean,"
        << eval_detail::format_accuracy(result.mean_accuracy()) << '\n';
  }
}

}  // namespace adsm
