#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adsm/error.hpp"
#include "adsm/io.hpp"
#include "adsm/log.hpp"

namespace adsm {

/// One audio clip with its (possibly empty) groundtruth tag set.
struct ClipRecord {
  std::string clip_id;
  std::filesystem::path audio_path;  // empty when features are imported
  std::set<std::string> tags;        // deduplicated, trimmed, lowercased
};

/// Relative similarity judgment: clip c is the odd one out,
/// i.e. d(a,b) < d(a,c).
struct TripletConstraint {
  std::string a;
  std::string b;
  std::string c;

  bool operator==(const TripletConstraint&) const = default;
  auto operator<=>(const TripletConstraint&) const = default;
};

struct FoldAssignment {
  int fold_index = 0;
  std::vector<TripletConstraint> train_constraints;
  std::vector<TripletConstraint> test_constraints;
};

/// Immutable after loading; safe for concurrent reads.
class Corpus {
 public:
  void add_clip(ClipRecord clip) {
    if (clip.clip_id.empty()) throw ValidationError("clip with empty id");
    auto [it, inserted] = clips_.emplace(clip.clip_id, std::move(clip));
    if (!inserted) throw ConflictError("duplicate clip id: " + it->first);
  }

  void add_clips(std::vector<ClipRecord> clips) {
    for (auto& c : clips) add_clip(std::move(c));
  }

  bool has_clip(const std::string& id) const { return clips_.count(id) != 0; }

  const ClipRecord& clip(const std::string& id) const {
    auto it = clips_.find(id);
    if (it == clips_.end()) throw ResolutionError("unknown clip id: " + id);
    return it->second;
  }

  /// Clips in clip_id order (std::map iteration), so every downstream
  /// computation sees a canonical order regardless of file order.
  const std::map<std::string, ClipRecord>& clips() const { return clips_; }

  std::size_t clip_count() const { return clips_.size(); }

  /// Sorted union of all clip tags. Deterministic by construction.
  std::vector<std::string> tag_vocabulary() const {
    std::set<std::string> tags;
    for (const auto& [id, clip] : clips_) tags.insert(clip.tags.begin(), clip.tags.end());
    return {tags.begin(), tags.end()};
  }

  std::vector<TripletConstraint> constraints;
  std::vector<FoldAssignment> folds;

 private:
  std::map<std::string, ClipRecord> clips_;
};

enum class AnnotationFormat { kTsv, kBinaryMatrixCsv };

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<ClipRecord> load_annotations_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations file: " + path.string());
  std::vector<ClipRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    const std::string id = trim(tab == std::string::npos ? line : line.substr(0, tab));
    if (id.empty()) throw ParseError(path.string() + ": empty clip id", lineno);
    if (!seen.insert(id).second)
      throw ConflictError(path.string() + ": duplicate clip id '" + id + "' at line " +
                          std::to_string(lineno));
    ClipRecord clip;
    clip.clip_id = id;
    if (tab != std::string::npos) {
      for (const std::string& raw : split(line.substr(tab + 1), ',')) {
        const std::string tag = lower(trim(raw));
        if (!tag.empty()) clip.tags.insert(tag);
      }
    }
    out.push_back(std::move(clip));
  }
  return out;
}

/// Binary-matrix CSV/TSV: header row names the tag columns, data rows carry
/// 0/1 flags. Cells that are neither "0" nor "1" (e.g. an mp3 path column)
/// are ignored. Handles the MagnaTagATune annotations_final layout.
inline std::vector<ClipRecord> load_annotations_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> header;
  for (const std::string& cell : split(line, sep)) header.push_back(lower(trim(strip_quotes(cell))));
  if (header.size() < 2) throw ParseError(path.string() + ": header needs id + tag columns", 1);

  std::vector<ClipRecord> out;
  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, sep);
    if (cells.size() != header.size())
      throw ParseError(path.string() + ": expected " + std::to_string(header.size()) +
                           " columns, got " + std::to_string(cells.size()),
                       lineno);
    ClipRecord clip;
    clip.clip_id = trim(strip_quotes(cells[0]));
    if (clip.clip_id.empty()) throw ParseError(path.string() + ": empty clip id", lineno);
    if (!seen.insert(clip.clip_id).second)
      throw ConflictError(path.string() + ": duplicate clip id '" + clip.clip_id + "' at line " +
                          std::to_string(lineno));
    for (std::size_t j = 1; j < cells.size(); ++j) {
      const std::string cell = trim(strip_quotes(cells[j]));
      if (cell == "1" && !header[j].empty()) clip.tags.insert(header[j]);
    }
    out.push_back(std::move(clip));
  }
  return out;
}

}  // namespace detail

/// Parse an annotation file into clip records. Tags come back deduplicated,
/// trimmed and lowercased; clips with zero tags are retained.
inline std::vector<ClipRecord> load_annotations(const std::filesystem::path& path,
                                                AnnotationFormat format = AnnotationFormat::kTsv) {
  switch (format) {
    case AnnotationFormat::kTsv:
      return detail::load_annotations_tsv(path);
    case AnnotationFormat::kBinaryMatrixCsv:
      return detail::load_annotations_matrix(path);
  }
  throw ValidationError("unknown annotation format");
}

/// Parse one constraint per line: three whitespace- or comma-separated clip
/// ids. Order-preserving; duplicates kept. Ids must resolve in the corpus.
inline std::vector<TripletConstraint> load_constraints(const std::filesystem::path& path,
                                                       const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open constraints file: " + path.string());
  std::vector<TripletConstraint> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<std::string> ids;
    std::string id;
    while (fields >> id) ids.push_back(id);
    if (ids.empty()) continue;
    if (ids.size() != 3)
      throw ParseError(path.string() + ": expected 3 clip ids, got " + std::to_string(ids.size()),
                       lineno);
    if (ids[0] == ids[1] || ids[0] == ids[2] || ids[1] == ids[2])
      throw ValidationError(path.string() + ": non-distinct triplet at line " +
                            std::to_string(lineno));
    for (const std::string& i : ids)
      if (!corpus.has_clip(i))
        throw ResolutionError(path.string() + ": unknown clip id '" + i + "' at line " +
                              std::to_string(lineno));
    out.push_back({ids[0], ids[1], ids[2]});
  }
  return out;
}

/// Load fold files as (train, test) path pairs, validating per-fold
/// disjointness of the two constraint sets.
inline std::vector<FoldAssignment> load_folds(
    const std::vector<std::pair<std::filesystem::path, std::filesystem::path>>& fold_files,
    const Corpus& corpus) {
  std::vector<FoldAssignment> folds;
  int index = 0;
  for (const auto& [train_path, test_path] : fold_files) {
    FoldAssignment fold;
    fold.fold_index = index++;
    fold.train_constraints = load_constraints(train_path, corpus);
    fold.test_constraints = load_constraints(test_path, corpus);
    std::set<TripletConstraint> train_set(fold.train_constraints.begin(),
                                          fold.train_constraints.end());
    for (const TripletConstraint& t : fold.test_constraints)
      if (train_set.count(t))
        throw ValidationError("fold " + std::to_string(fold.fold_index) + ": constraint (" + t.a +
                              "," + t.b + "," + t.c + ") appears in both train and test");
    folds.push_back(std::move(fold));
  }
  return folds;
}

/// Scan a directory for fold<i>.train / fold<i>.test pairs, i = 0,1,2,...
inline std::vector<FoldAssignment> load_folds_dir(const std::filesystem::path& dir,
                                                  const Corpus& corpus) {
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> files;
  for (int i = 0;; ++i) {
    const auto train = dir / ("fold" + std::to_string(i) + ".train");
    const auto test = dir / ("fold" + std::to_string(i) + ".test");
    if (!std::filesystem::exists(train) || !std::filesystem::exists(test)) break;
    files.emplace_back(train, test);
  }
  if (files.empty()) throw IoError("no fold files (fold<i>.train/.test) found in " + dir.string());
  return load_folds(files, corpus);
}

/// Clip ids referenced by a fold's test constraints. These are excluded
/// from every training stage of the fold's pipeline.
inline std::set<std::string> test_clip_ids(const FoldAssignment& fold) {
  std::set<std::string> out;
  for (const TripletConstraint& t : fold.test_constraints) {
    out.insert(t.a);
    out.insert(t.b);
    out.insert(t.c);
  }
  return out;
}

/// All corpus clips that are not test clips of the fold, in id order.
inline std::vector<std::string> train_clip_ids(const Corpus& corpus, const FoldAssignment& fold) {
  const std::set<std::string> test = test_clip_ids(fold);
  std::vector<std::string> out;
  for (const auto& [id, clip] : corpus.clips())
    if (!test.count(id)) out.push_back(id);
  return out;
}

}  // namespace adsm
