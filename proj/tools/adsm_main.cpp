// adsm: bag-of-audio-words / acoustic-semantic embedding pipeline CLI.
//
// Subcommands: extract | train-vocab | embed | autotag | evaluate | sweep |
// validate-config. Every run writes a manifest.json (config snapshot, input
// checksums, version, seeds) into the output directory before any outputs.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "adsm/adsm.hpp"

namespace fs = std::filesystem;

namespace {

struct CliOptions {
  adsm::RunConfig rc;
  bool json_errors = false;
  std::string demo_dir;

  // extract
  std::string extract_out;
  // train-vocab
  std::string vocab_out;
  std::string train_clips_file;
  int kmeans_max_iters = 100;
  double kmeans_tol = 1e-6;
  int kmeans_restarts = 1;
  // embed
  std::string embed_out;
  std::string vocab_path;
  std::string tag_matrix_out;
  // autotag
  std::string emb_dir;
  std::string tag_matrix_path;
  std::string predictions_out;
  // evaluate / sweep
  std::string corpus_dir;
  std::string results_out;
  std::string annotations_format = "tsv";
  std::string sweep_axis = "vocab-clips";
  std::string sweep_values = "50,100,200,500,1000";
  // validate-config
  std::string config_to_validate;
};

unsigned effective_workers(const adsm::RunConfig& rc) {
  return rc.workers > 0 ? static_cast<unsigned>(rc.workers) : adsm::parallel::default_workers();
}

std::vector<std::string> sorted_stems(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) throw adsm::IoError("not a directory: " + dir.string());
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == extension)
      stems.push_back(e.path().stem().string());
  std::sort(stems.begin(), stems.end());
  return stems;
}

adsm::AnnotationFormat parse_annotation_format(const std::string& name) {
  if (name == "tsv") return adsm::AnnotationFormat::kTsv;
  if (name == "csv") return adsm::AnnotationFormat::kBinaryMatrixCsv;
  throw adsm::ValidationError("unknown annotations format: " + name);
}

adsm::Corpus load_corpus(const CliOptions& opt) {
  const fs::path dir = opt.corpus_dir;
  const fs::path annotations = opt.rc.annotations.empty() ? dir / "annotations.tsv"
                                                          : opt.rc.annotations;
  const fs::path constraints = opt.rc.constraints.empty() ? dir / "constraints.txt"
                                                          : opt.rc.constraints;
  const fs::path folds = opt.rc.folds_dir.empty() ? dir / "folds" : opt.rc.folds_dir;

  adsm::Corpus corpus;
  corpus.add_clips(
      adsm::load_annotations(annotations, parse_annotation_format(opt.annotations_format)));
  corpus.constraints = adsm::load_constraints(constraints, corpus);
  corpus.folds = adsm::load_folds_dir(folds, corpus);
  return corpus;
}

fs::path features_dir_for(const CliOptions& opt) {
  if (!opt.rc.features_dir.empty()) return opt.rc.features_dir;
  if (!opt.corpus_dir.empty()) return fs::path(opt.corpus_dir) / "features";
  throw adsm::ValidationError("no features directory given (--features)");
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

void cmd_extract(const CliOptions& opt) {
  const fs::path out_dir = opt.extract_out;
  if (opt.rc.feature_kind == "import") {
    // Import path: verify that pre-imported feature files parse cleanly.
    std::size_t count = 0;
    for (const std::string& stem : sorted_stems(out_dir, ".fv")) {
      adsm::io::import_features(out_dir / (stem + ".fv"));
      ++count;
    }
    if (count == 0) throw adsm::ValidationError("import mode: no .fv files in " + out_dir.string());
    std::printf("validated %zu imported feature files in %s\n", count, out_dir.string().c_str());
    return;
  }

  const fs::path audio_dir = opt.rc.audio_dir;
  const std::vector<std::string> stems = sorted_stems(audio_dir, ".wav");
  if (stems.empty()) throw adsm::ValidationError("no .wav files in " + audio_dir.string());

  adsm::write_manifest(out_dir, "extract", opt.rc, {audio_dir});
  const adsm::WindowingConfig wcfg{opt.rc.window_ms, opt.rc.hop_ms};
  wcfg.validate();

  const unsigned workers = effective_workers(opt.rc);
  std::vector<std::string> failures(stems.size());
  adsm::parallel::for_each_index(stems.size(), workers, [&](std::size_t i) {
    try {
      const adsm::AudioBuffer buf = adsm::decode_and_resample(audio_dir / (stems[i] + ".wav"));
      adsm::io::write_fv(out_dir / (stems[i] + ".fv"), adsm::compute_mfccdd(buf, wcfg));
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  for (const std::string& f : failures)
    if (!f.empty()) throw adsm::Error(f);
  std::printf("extracted features for %zu clips into %s\n", stems.size(),
              out_dir.string().c_str());
}

void cmd_train_vocab(const CliOptions& opt) {
  const fs::path features_dir = opt.rc.features_dir;
  std::vector<std::string> train_ids;
  if (!opt.train_clips_file.empty()) {
    std::ifstream in(opt.train_clips_file);
    if (!in) throw adsm::IoError("cannot open train clip list: " + opt.train_clips_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) train_ids.push_back(line);
    }
  } else {
    train_ids = sorted_stems(features_dir, ".fv");
  }
  if (train_ids.empty()) throw adsm::ValidationError("train-vocab: empty training clip list");

  const fs::path out = opt.vocab_out;
  adsm::write_manifest(out.parent_path().empty() ? "." : out.parent_path(), "train-vocab", opt.rc,
                       {features_dir});

  const std::vector<std::string> sampled = adsm::sample_training_clips(
      train_ids, static_cast<std::size_t>(opt.rc.vocab_clips), opt.rc.seed);
  std::vector<adsm::Matrix> parts;
  parts.reserve(sampled.size());
  for (const std::string& id : sampled)
    parts.push_back(adsm::io::import_features(features_dir / (id + ".fv")));
  const adsm::NormalizationStats stats = adsm::fit_normalization(parts);
  for (adsm::Matrix& part : parts) part = adsm::apply_normalization(part, stats);
  const adsm::Matrix pooled = adsm::Matrix::vstack(parts);

  adsm::VocabTrainConfig vcfg;
  vcfg.k = opt.rc.k;
  vcfg.max_clips = opt.rc.vocab_clips;
  vcfg.max_iters = opt.kmeans_max_iters;
  vcfg.tol = opt.kmeans_tol;
  vcfg.seed = opt.rc.seed;
  vcfg.restarts = opt.kmeans_restarts;
  const adsm::AudioWordVocabulary vocab =
      adsm::train_vocabulary(pooled, vcfg, stats, effective_workers(opt.rc));
  adsm::save_vocabulary(vocab, out);
  std::printf("trained vocabulary: k=%zu d=%zu inertia=%.6f -> %s\n", vocab.k(), vocab.dim(),
              vocab.inertia, out.string().c_str());
}

void cmd_embed(const CliOptions& opt) {
  const fs::path features_dir = opt.rc.features_dir;
  const adsm::AudioWordVocabulary vocab = adsm::load_vocabulary(opt.vocab_path);
  const adsm::MethodSpec method = opt.rc.method_spec();

  adsm::Corpus corpus;
  corpus.add_clips(adsm::load_annotations(opt.rc.annotations,
                                          parse_annotation_format(opt.annotations_format)));

  std::vector<std::string> train_ids;
  if (!opt.train_clips_file.empty()) {
    std::ifstream in(opt.train_clips_file);
    if (!in) throw adsm::IoError("cannot open train clip list: " + opt.train_clips_file);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) train_ids.push_back(line);
  } else {
    for (const auto& [id, clip] : corpus.clips()) train_ids.push_back(id);
  }

  const fs::path out_dir = opt.embed_out;
  adsm::write_manifest(out_dir, "embed", opt.rc, {features_dir, opt.rc.annotations,
                                                  fs::path(opt.vocab_path)});

  const unsigned workers = effective_workers(opt.rc);
  const auto audio_embedding = [&](const std::string& id) {
    const adsm::Matrix m = adsm::apply_normalization(
        adsm::io::import_features(features_dir / (id + ".fv")), vocab.norm_stats);
    return adsm::clip_audio_embedding(id, m, vocab, method.encoding);
  };

  // Training AUDIO embeddings feed the tag matrix and the optional SVD fit.
  std::vector<adsm::ClipEmbedding> train_audio(train_ids.size());
  adsm::parallel::for_each_index(train_ids.size(), workers,
                                 [&](std::size_t i) { train_audio[i] = audio_embedding(train_ids[i]); });

  std::optional<adsm::TagMatrix> tags;
  std::vector<adsm::ClipEmbedding> tagged;
  for (const adsm::ClipEmbedding& e : train_audio)
    if (!corpus.clip(e.clip_id).tags.empty()) tagged.push_back(e);
  if (!tagged.empty()) tags = adsm::build_tag_matrix(tagged, corpus);
  if (method.uses_semantic() && !tags)
    throw adsm::ValidationError("embed: semantic space requires tagged training clips");
  if (!opt.tag_matrix_out.empty()) {
    if (!tags) throw adsm::ValidationError("embed: no tagged clips, cannot write tag matrix");
    adsm::save_tag_matrix(*tags, opt.tag_matrix_out);
  }

  const auto final_embedding = [&](const adsm::ClipEmbedding& audio) {
    std::vector<double> semantic;
    if (method.uses_semantic())
      semantic = adsm::eval_detail::semantic_for_clip(audio.clip_id, audio.values, corpus, *tags,
                                                      method, nullptr);
    return adsm::eval_detail::method_space_embedding(audio.clip_id, audio.values,
                                                     std::move(semantic), method);
  };

  std::optional<adsm::SvdProjector> svd;
  if (method.svd_rank) {
    std::vector<std::vector<double>> rows;
    for (const adsm::ClipEmbedding& e : train_audio) {
      try {
        rows.push_back(final_embedding(e).values);
      } catch (const adsm::NoTagsError&) {
        continue;
      }
    }
    if (rows.empty()) throw adsm::ValidationError("embed: no embeddings available for svd fit");
    adsm::Matrix fit(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      std::copy(rows[r].begin(), rows[r].end(), fit.row(r).begin());
    svd = adsm::fit_svd(fit, *method.svd_rank, method.space);
  }

  std::size_t written = 0;
  for (const auto& [id, clip] : corpus.clips()) {
    adsm::ClipEmbedding emb;
    try {
      emb = final_embedding(audio_embedding(id));
    } catch (const adsm::NoTagsError&) {
      adsm::log::warn("embed: skipping clip ", id, " (no usable tags, policy=skip)");
      continue;
    }
    if (svd) emb.values = adsm::project(emb.values, *svd);
    adsm::Matrix row(1, emb.values.size());
    std::copy(emb.values.begin(), emb.values.end(), row.data.begin());
    adsm::io::write_fv(out_dir / (id + ".fv"), row);
    ++written;
  }

  nlohmann::json meta = {
      {"space", adsm::to_string(method.space)},
      {"w", method.w},
      {"fusion_mode", adsm::to_string(method.fusion_mode)},
      {"svd_rank", method.svd_rank ? nlohmann::json(*method.svd_rank) : nlohmann::json(nullptr)},
      {"encoding", adsm::to_string(method.encoding)},
      {"n_tags", method.n_tags},
      {"vocab_checksum", adsm::input_checksum(opt.vocab_path)},
  };
  adsm::io::write_file(out_dir / "meta.json", meta.dump(2) + "\n");
  std::printf("wrote %zu %s-space embeddings into %s\n", written,
              adsm::to_string(method.space), out_dir.string().c_str());
}

void cmd_autotag(const CliOptions& opt) {
  const adsm::TagMatrix tags = adsm::load_tag_matrix(opt.tag_matrix_path);
  const fs::path emb_dir = opt.emb_dir;
  const std::vector<std::string> stems = sorted_stems(emb_dir, ".fv");
  if (stems.empty()) throw adsm::ValidationError("autotag: no embeddings in " + emb_dir.string());

  const fs::path out = opt.predictions_out;
  adsm::write_manifest(out.parent_path().empty() ? "." : out.parent_path(), "autotag", opt.rc,
                       {emb_dir, fs::path(opt.tag_matrix_path)});

  std::ofstream tsv(out);
  if (!tsv) throw adsm::IoError("cannot write " + out.string());
  for (const std::string& id : stems) {
    const adsm::Matrix emb = adsm::io::import_features(emb_dir / (id + ".fv"));
    if (emb.rows != 1) throw adsm::FormatError("embedding file must have one row: " + id);
    for (const adsm::TagPrediction& p : adsm::autotag(emb.row(0), tags, opt.rc.n_tags)) {
      char score[32];
      std::snprintf(score, sizeof score, "%.6f", p.score);
      tsv << id << '\t' << p.rank << '\t' << p.tag << '\t' << score << '\n';
    }
  }
  std::printf("wrote predictions for %zu clips to %s\n", stems.size(), out.string().c_str());
}

void cmd_evaluate(const CliOptions& opt) {
  const adsm::Corpus corpus = load_corpus(opt);
  const adsm::DirectoryFeatureSource features(features_dir_for(opt));
  const adsm::MethodSpec method = opt.rc.method_spec();

  const fs::path out = opt.results_out;
  const fs::path out_dir = out.parent_path().empty() ? "." : out.parent_path();
  adsm::write_manifest(out_dir, "evaluate", opt.rc,
                       {opt.rc.annotations, opt.rc.constraints, opt.rc.folds_dir,
                        fs::path(opt.corpus_dir), features.dir()});

  const adsm::EvalResult result = adsm::run_cv(corpus, features, method, opt.rc.repeats,
                                               opt.rc.seed, effective_workers(opt.rc));
  std::ofstream csv(out);
  if (!csv) throw adsm::IoError("cannot write " + out.string());
  adsm::write_results_csv(csv, result);
  std::printf("%s: mean accuracy %.4f over %d repeats x %zu folds -> %s\n",
              adsm::to_string(method.space), result.mean_accuracy(), result.repeats,
              result.fold_count, out.string().c_str());
}

void cmd_sweep(const CliOptions& opt) {
  const adsm::Corpus corpus = load_corpus(opt);
  const adsm::DirectoryFeatureSource features(features_dir_for(opt));
  const adsm::MethodSpec method = opt.rc.method_spec();
  const adsm::SweepAxis axis = adsm::parse_sweep_axis(opt.sweep_axis);

  std::vector<double> values;
  std::istringstream vs(opt.sweep_values);
  std::string item;
  while (std::getline(vs, item, ','))
    if (!item.empty()) values.push_back(std::stod(item));

  const fs::path out = opt.results_out;
  const fs::path out_dir = out.parent_path().empty() ? "." : out.parent_path();
  adsm::write_manifest(out_dir, "sweep", opt.rc,
                       {opt.rc.annotations, opt.rc.constraints, opt.rc.folds_dir,
                        fs::path(opt.corpus_dir), features.dir()});

  const auto table = adsm::sweep(corpus, features, method, axis, values, opt.rc.repeats,
                                 opt.rc.seed, effective_workers(opt.rc));
  std::ofstream csv(out);
  if (!csv) throw adsm::IoError("cannot write " + out.string());
  adsm::write_sweep_csv(csv, axis, table);
  std::printf("swept %s over %zu values -> %s\n", adsm::to_string(axis), values.size(),
              out.string().c_str());
}

void cmd_validate_config(const CliOptions& opt) {
  adsm::RunConfig rc;
  rc.apply_toml(adsm::parse_toml(opt.config_to_validate));
  rc.validate();
  std::printf("config ok: %s\n", opt.config_to_validate.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CliOptions opt;

  // Config file values act as defaults; explicit flags override them.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
    if (!path.empty()) {
      try {
        opt.rc.apply_toml(adsm::parse_toml(path));
      } catch (const adsm::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
      }
      break;
    }
  }

  CLI::App app{"Audio-based distributional semantic model pipeline"};
  app.set_version_flag("--version", adsm::kVersion);
  std::string config_path;
  app.add_option("--config", config_path, "TOML run configuration (flags override)");
  app.add_option("--seed", opt.rc.seed, "Base RNG seed");
  app.add_option("--workers", opt.rc.workers, "Worker threads (0 = logical cores)");
  app.add_option("--log-level", opt.rc.log_level, "debug|info|warn|error|off");
  app.add_flag("--json-errors", opt.json_errors, "Emit errors as JSON on stderr");
  app.add_option("--demo", opt.demo_dir,
                 "Generate the bundled synthetic demo corpus into DIR and exit");

  auto* extract = app.add_subcommand("extract", "Extract MFCCdd features from WAV files");
  extract->add_option("--audio-dir", opt.rc.audio_dir, "Directory of <clip_id>.wav files");
  extract->add_option("--out", opt.extract_out, "Output feature directory")->required();
  extract->add_option("--window-ms", opt.rc.window_ms, "Window length in ms");
  extract->add_option("--hop-ms", opt.rc.hop_ms, "Hop length in ms");
  extract->add_option("--features", opt.rc.feature_kind, "mfccdd | import");

  auto* train_vocab = app.add_subcommand("train-vocab", "Train the audio-word vocabulary");
  train_vocab->add_option("--features", opt.rc.features_dir, "Feature directory")->required();
  train_vocab->add_option("--train-clips", opt.train_clips_file, "Clip id list (default: all)");
  train_vocab->add_option("--k", opt.rc.k, "Number of audio words");
  train_vocab->add_option("--max-clips", opt.rc.vocab_clips, "Vocabulary clip sample size");
  train_vocab->add_option("--max-iters", opt.kmeans_max_iters, "Lloyd iteration budget");
  train_vocab->add_option("--tol", opt.kmeans_tol, "Relative inertia tolerance");
  train_vocab->add_option("--restarts", opt.kmeans_restarts, "k-means restarts");
  train_vocab->add_option("--out", opt.vocab_out, "Output .awv path")->required();

  auto* embed = app.add_subcommand("embed", "Build clip embeddings in a chosen space");
  embed->add_option("--space", opt.rc.space, "audio|adsm|adsm-autotag|fusion|fusion-autotag");
  embed->add_option("--vocab", opt.vocab_path, "Trained vocabulary (.awv)")->required();
  embed->add_option("--features", opt.rc.features_dir, "Feature directory")->required();
  embed->add_option("--annotations", opt.rc.annotations, "Annotation file")->required();
  embed->add_option("--annotations-format", opt.annotations_format, "tsv | csv");
  embed->add_option("--train-clips", opt.train_clips_file,
                    "Clips used for tag matrix / svd fit (default: all)");
  embed->add_option("--w", opt.rc.w, "Fusion weight");
  embed->add_option("--fusion-mode", opt.rc.fusion_mode, "average | concatenate");
  embed->add_option("--svd", opt.rc.svd, "SVD rank (0 = off)");
  embed->add_option("--n", opt.rc.n_tags, "Tags per clip for autotag semantics");
  embed->add_option("--encoding", opt.rc.encoding, "soft-cosine | hard");
  embed->add_option("--tag-matrix-out", opt.tag_matrix_out, "Also write the tag matrix here");
  embed->add_option("--out", opt.embed_out, "Output embedding directory")->required();

  auto* autotag = app.add_subcommand("autotag", "Predict top-N tags for embedded clips");
  autotag->add_option("--emb", opt.emb_dir, "AUDIO-space embedding directory")->required();
  autotag->add_option("--tags", opt.tag_matrix_path, "Tag matrix file")->required();
  autotag->add_option("--n", opt.rc.n_tags, "Number of tags to return");
  autotag->add_option("--out", opt.predictions_out, "Output TSV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Constraint-satisfaction cross-validation");
  evaluate->add_option("--corpus", opt.corpus_dir,
                       "Corpus dir (annotations.tsv, constraints.txt, folds/, features/)");
  evaluate->add_option("--annotations", opt.rc.annotations, "Annotation file override");
  evaluate->add_option("--annotations-format", opt.annotations_format, "tsv | csv");
  evaluate->add_option("--constraints", opt.rc.constraints, "Constraint file override");
  evaluate->add_option("--folds", opt.rc.folds_dir, "Fold directory override");
  evaluate->add_option("--features", opt.rc.features_dir, "Feature directory override");
  evaluate->add_option("--method", opt.rc.space, "Embedding space / method");
  evaluate->add_option("--feature-kind", opt.rc.feature_kind, "mfccdd | imported");
  evaluate->add_option("--k", opt.rc.k, "Number of audio words");
  evaluate->add_option("--svd", opt.rc.svd, "SVD rank (0 = off)");
  evaluate->add_option("--w", opt.rc.w, "Fusion weight");
  evaluate->add_option("--fusion-mode", opt.rc.fusion_mode, "average | concatenate");
  evaluate->add_option("--n", opt.rc.n_tags, "Tags per clip for autotag semantics");
  evaluate->add_option("--encoding", opt.rc.encoding, "soft-cosine | hard");
  evaluate->add_option("--vocab-clips", opt.rc.vocab_clips, "Vocabulary clip sample size");
  evaluate->add_option("--norm-scope", opt.rc.norm_scope, "fold-train | global");
  evaluate->add_option("--adsm-untagged", opt.rc.adsm_untagged, "autotag | skip");
  evaluate->add_option("--repeats", opt.rc.repeats, "Cross-validation repeats");
  evaluate->add_option("--out", opt.results_out, "Output results.csv")->required();

  auto* sweep = app.add_subcommand("sweep", "Evaluate across one parameter axis");
  for (CLI::App* sub : {sweep}) {
    sub->add_option("--corpus", opt.corpus_dir, "Corpus directory");
    sub->add_option("--annotations", opt.rc.annotations, "Annotation file override");
    sub->add_option("--annotations-format", opt.annotations_format, "tsv | csv");
    sub->add_option("--constraints", opt.rc.constraints, "Constraint file override");
    sub->add_option("--folds", opt.rc.folds_dir, "Fold directory override");
    sub->add_option("--features", opt.rc.features_dir, "Feature directory override");
    sub->add_option("--method", opt.rc.space, "Embedding space / method");
    sub->add_option("--k", opt.rc.k, "Number of audio words");
    sub->add_option("--svd", opt.rc.svd, "SVD rank (0 = off)");
    sub->add_option("--w", opt.rc.w, "Fusion weight");
    sub->add_option("--n", opt.rc.n_tags, "Tags per clip for autotag semantics");
    sub->add_option("--vocab-clips", opt.rc.vocab_clips, "Vocabulary clip sample size");
    sub->add_option("--repeats", opt.rc.repeats, "Cross-validation repeats");
  }
  sweep->add_option("--axis", opt.sweep_axis, "w|n-tags|k|svd-rank|vocab-clips")->required();
  sweep->add_option("--values", opt.sweep_values, "Comma-separated axis values")->required();
  sweep->add_option("--out", opt.results_out, "Output sweep.csv")->required();

  auto* validate = app.add_subcommand("validate-config", "Validate a TOML run configuration");
  validate->add_option("config", opt.config_to_validate, "Config file")->required();

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // CLI11 prints usage; non-zero exit for errors
  }

  adsm::log::Level lvl;
  if (adsm::log::parse_level(opt.rc.log_level, lvl)) adsm::log::level().store(lvl);

  try {
    if (!opt.demo_dir.empty()) {
      adsm::demo::write_demo_corpus(opt.demo_dir, opt.rc.seed);
      std::printf("demo corpus written to %s\n", opt.demo_dir.c_str());
      return 0;
    }
    if (extract->parsed()) cmd_extract(opt);
    else if (train_vocab->parsed()) cmd_train_vocab(opt);
    else if (embed->parsed()) cmd_embed(opt);
    else if (autotag->parsed()) cmd_autotag(opt);
    else if (evaluate->parsed()) cmd_evaluate(opt);
    else if (sweep->parsed()) cmd_sweep(opt);
    else if (validate->parsed()) cmd_validate_config(opt);
    else {
      std::fprintf(stderr, "%s\n", app.help().c_str());
      return 1;
    }
  } catch (const adsm::Error& e) {
    if (opt.json_errors) {
      nlohmann::json err = {{"error", {{"type", "data"}, {"message", e.what()}}}};
      std::fprintf(stderr, "%s\n", err.dump().c_str());
    } else {
      std::fprintf(stderr, "error: %s\n", e.what());
    }
    return 2;
  } catch (const std::exception& e) {
    if (opt.json_errors) {
      nlohmann::json err = {{"error", {{"type", "internal"}, {"message", e.what()}}}};
      std::fprintf(stderr, "%s\n", err.dump().c_str());
    } else {
      std::fprintf(stderr, "internal error: %s\n", e.what());
    }
    return 3;
  }
  return 0;
}
