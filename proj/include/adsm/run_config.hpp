#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adsm/error.hpp"
#include "adsm/eval.hpp"
#include "adsm/io.hpp"
#include "adsm/log.hpp"
#include "adsm/version.hpp"

#include "json.hpp"

namespace adsm {

// ---------------------------------------------------------------------------
// TOML subset reader: [section] headers, key = value lines, # comments.
// Values: "strings", integers, floats, booleans. Covers flat experiment
// configs; nested tables and arrays are out of scope.
// ---------------------------------------------------------------------------

struct TomlValue {
  enum class Kind { kString, kInteger, kFloat, kBoolean } kind = Kind::kString;
  std::string str;
  std::int64_t integer = 0;
  double number = 0.0;
  bool boolean = false;

  double as_number() const {
    return kind == Kind::kInteger ? static_cast<double>(integer) : number;
  }
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

namespace config_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline TomlValue parse_value(const std::string& raw, std::size_t lineno,
                             const std::string& origin) {
  TomlValue v;
  if (raw.empty()) throw ParseError(origin + ": empty value", lineno);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"')
      throw ParseError(origin + ": unterminated string", lineno);
    v.kind = TomlValue::Kind::kString;
    v.str = raw.substr(1, raw.size() - 2);
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = TomlValue::Kind::kBoolean;
    v.boolean = raw == "true";
    return v;
  }
  try {
    if (raw.find_first_of(".eE") == std::string::npos) {
      std::size_t used = 0;
      v.integer = std::stoll(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      v.kind = TomlValue::Kind::kInteger;
    } else {
      std::size_t used = 0;
      v.number = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      v.kind = TomlValue::Kind::kFloat;
    }
  } catch (const std::exception&) {
    throw ParseError(origin + ": cannot parse value '" + raw + "'", lineno);
  }
  return v;
}

}  // namespace config_detail

inline TomlTable parse_toml(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  TomlTable table;
  std::string section;  // top-level keys live under ""
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // strip comments (respecting quoted strings)
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line.resize(i);
        break;
      }
    }
    line = config_detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError(path.string() + ": malformed section header", lineno);
      section = config_detail::trim(line.substr(1, line.size() - 2));
      table[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ": expected 'key = value'", lineno);
    const std::string key = config_detail::trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(path.string() + ": empty key", lineno);
    if (table[section].count(key))
      throw ParseError(path.string() + ": duplicate key '" + key + "'", lineno);
    table[section][key] =
        config_detail::parse_value(config_detail::trim(line.substr(eq + 1)), lineno,
                                   path.string());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// Everything a pipeline run needs, assembled from a TOML file and/or CLI
/// flags (flags win). Paths are validated at validate() time, not load time,
/// so subcommands can require only what they use.
struct RunConfig {
  std::filesystem::path audio_dir;
  std::filesystem::path features_dir;
  std::filesystem::path annotations;
  std::filesystem::path constraints;
  std::filesystem::path folds_dir;
  std::filesystem::path output_dir;

  std::string space = "audio";
  std::string feature_kind = "mfccdd";
  int k = 300;
  int svd = 0;  // 0 = disabled
  double w = 0.9;
  std::string fusion_mode = "average";
  int n_tags = 20;
  std::string encoding = "soft-cosine";
  int vocab_clips = 1000;
  std::string norm_scope = "fold-train";
  std::string adsm_untagged = "autotag";
  int window_ms = 250;
  int hop_ms = 100;

  std::uint64_t seed = 42;
  int repeats = 10;
  int workers = 0;  // 0 = all logical cores
  std::string log_level = "warn";

  void apply_toml(const TomlTable& table) {
    const auto get = [&](const char* section, const char* key) -> const TomlValue* {
      const auto sit = table.find(section);
      if (sit == table.end()) return nullptr;
      const auto kit = sit->second.find(key);
      return kit == sit->second.end() ? nullptr : &kit->second;
    };
    const auto set_path = [&](const char* key, std::filesystem::path& out) {
      if (const TomlValue* v = get("paths", key)) out = v->str;
    };
    set_path("audio_dir", audio_dir);
    set_path("features_dir", features_dir);
    set_path("annotations", annotations);
    set_path("constraints", constraints);
    set_path("folds_dir", folds_dir);
    set_path("output_dir", output_dir);

    const auto set_str = [&](const char* section, const char* key, std::string& out) {
      if (const TomlValue* v = get(section, key)) out = v->str;
    };
    const auto set_int = [&](const char* section, const char* key, int& out) {
      if (const TomlValue* v = get(section, key)) out = static_cast<int>(v->integer);
    };
    set_str("method", "space", space);
    set_str("method", "feature_kind", feature_kind);
    set_int("method", "k", k);
    set_int("method", "svd", svd);
    if (const TomlValue* v = get("method", "w")) w = v->as_number();
    set_str("method", "fusion_mode", fusion_mode);
    set_int("method", "n_tags", n_tags);
    set_str("method", "encoding", encoding);
    set_int("method", "vocab_clips", vocab_clips);
    set_str("method", "norm_scope", norm_scope);
    set_str("method", "adsm_untagged", adsm_untagged);
    set_int("method", "window_ms", window_ms);
    set_int("method", "hop_ms", hop_ms);
    if (const TomlValue* v = get("run", "seed")) seed = static_cast<std::uint64_t>(v->integer);
    set_int("run", "repeats", repeats);
    set_int("run", "workers", workers);
    set_str("run", "log_level", log_level);
  }

  /// Check numeric ranges and the existence of every path that is set.
  void validate() const {
    parse_space(space);
    parse_fusion_mode(fusion_mode);
    parse_encoding(encoding);
    parse_norm_scope(norm_scope);
    parse_untagged_policy(adsm_untagged);
    if (k < 2) throw ValidationError("config: k must be >= 2");
    if (svd < 0) throw ValidationError("config: svd must be >= 0");
    if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("config: w must be in [0,1]");
    if (n_tags < 1) throw ValidationError("config: n_tags must be >= 1");
    if (vocab_clips < 1) throw ValidationError("config: vocab_clips must be >= 1");
    if (repeats < 1) throw ValidationError("config: repeats must be >= 1");
    if (workers < 0) throw ValidationError("config: workers must be >= 0");
    if (window_ms <= 0 || hop_ms <= 0 || hop_ms > window_ms)
      throw ValidationError("config: require 0 < hop_ms <= window_ms");
    log::Level lvl;
    if (!log::parse_level(log_level, lvl))
      throw ValidationError("config: unknown log level '" + log_level + "'");
    const auto check_path = [](const std::filesystem::path& p, const char* what) {
      if (!p.empty() && !std::filesystem::exists(p))
        throw ValidationError(std::string("config: ") + what + " does not exist: " + p.string());
    };
    check_path(audio_dir, "audio_dir");
    check_path(features_dir, "features_dir");
    check_path(annotations, "annotations");
    check_path(constraints, "constraints");
    check_path(folds_dir, "folds_dir");
  }

  MethodSpec method_spec() const {
    MethodSpec m;
    m.space = parse_space(space);
    m.feature_kind = feature_kind;
    m.k = k;
    if (svd > 0) m.svd_rank = svd;
    m.w = w;
    m.fusion_mode = parse_fusion_mode(fusion_mode);
    m.n_tags = n_tags;
    m.encoding = parse_encoding(encoding);
    m.vocab_max_clips = vocab_clips;
    m.norm_scope = parse_norm_scope(norm_scope);
    m.adsm_untagged = parse_untagged_policy(adsm_untagged);
    return m;
  }

  nlohmann::json to_json() const {
    return {
        {"paths",
         {{"audio_dir", audio_dir.string()},
          {"features_dir", features_dir.string()},
          {"annotations", annotations.string()},
          {"constraints", constraints.string()},
          {"folds_dir", folds_dir.string()},
          {"output_dir", output_dir.string()}}},
        {"method",
         {{"space", space},
          {"feature_kind", feature_kind},
          {"k", k},
          {"svd", svd},
          {"w", w},
          {"fusion_mode", fusion_mode},
          {"n_tags", n_tags},
          {"encoding", encoding},
          {"vocab_clips", vocab_clips},
          {"norm_scope", norm_scope},
          {"adsm_untagged", adsm_untagged},
          {"window_ms", window_ms},
          {"hop_ms", hop_ms}}},
        {"run",
         {{"seed", seed},
          {"repeats", repeats},
          {"workers", workers},
          {"log_level", log_level}}},
    };
  }
};

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

/// Checksum for a manifest input entry: whole-file CRC32 for files,
/// CRC32 over the sorted (name, size) listing for directories.
inline std::string input_checksum(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    std::vector<std::string> entries;
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file())
        entries.push_back(e.path().filename().string() + ":" +
                          std::to_string(e.file_size()));
    std::sort(entries.begin(), entries.end());
    std::uint32_t crc = 0;
    for (const std::string& s : entries) crc = io::crc32(s, crc);
    char buf[32];
    std::snprintf(buf, sizeof buf, "dir:%zu:crc32:%08x", entries.size(), crc);
    return buf;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "crc32:%08x", io::file_crc32(path));
  return buf;
}

/// Write manifest.json into the output directory before any outputs, so a
/// partial failure can never leave outputs without their manifest.
inline void write_manifest(const std::filesystem::path& output_dir, const std::string& command,
                           const RunConfig& cfg,
                           const std::vector<std::filesystem::path>& inputs) {
  std::filesystem::create_directories(output_dir);
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = cfg.seed;
  manifest["workers"] = cfg.workers;
  manifest["config"] = cfg.to_json();
  nlohmann::json in = nlohmann::json::object();
  for (const auto& p : inputs)
    if (!p.empty() && std::filesystem::exists(p)) in[p.string()] = input_checksum(p);
  manifest["inputs"] = in;
  io::write_file(output_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace adsm
