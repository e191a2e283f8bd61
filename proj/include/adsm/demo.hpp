#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "adsm/audio.hpp"
#include "adsm/corpus.hpp"
#include "adsm/eval.hpp"
#include "adsm/features.hpp"
#include "adsm/rng.hpp"

namespace adsm::demo {

/// Synthetic corpus: three clearly separated timbre classes (sine tones,
/// white noise, linear chirps), four 2-second clips each, one class tag per
/// clip, 20 triplet constraints encoding the class structure, and 4 folds
/// of 15 train / 5 test constraints. Small enough to run the whole pipeline
/// in seconds without any external dataset.
struct DemoCorpus {
  Corpus corpus;
  std::map<std::string, AudioBuffer> audio;
};

namespace detail {

inline AudioBuffer synth_sine(double freq, double amplitude, double seconds, std::uint64_t seed) {
  AudioBuffer buf;
  buf.sample_rate = kTargetSampleRate;
  const auto n = static_cast<std::size_t>(seconds * kTargetSampleRate);
  buf.samples.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kTargetSampleRate;
    buf.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq * t) +
                     0.01 * (rng.next_double() - 0.5);
  }
  return buf;
}

inline AudioBuffer synth_noise(double amplitude, double seconds, std::uint64_t seed) {
  AudioBuffer buf;
  buf.sample_rate = kTargetSampleRate;
  const auto n = static_cast<std::size_t>(seconds * kTargetSampleRate);
  buf.samples.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) buf.samples[i] = amplitude * (2.0 * rng.next_double() - 1.0);
  return buf;
}

inline AudioBuffer synth_chirp(double f0, double f1, double amplitude, double seconds,
                               std::uint64_t seed) {
  AudioBuffer buf;
  buf.sample_rate = kTargetSampleRate;
  const auto n = static_cast<std::size_t>(seconds * kTargetSampleRate);
  buf.samples.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kTargetSampleRate;
    const double phase = 2.0 * std::numbers::pi * (f0 * t + (f1 - f0) * t * t / (2.0 * seconds));
    buf.samples[i] = amplitude * std::sin(phase) + 0.01 * (rng.next_double() - 0.5);
  }
  return buf;
}

inline std::vector<TripletConstraint> demo_constraints() {
  // (a, b same class, c the outlier); 5 per fold block, 4 blocks.
  std::vector<TripletConstraint> out;
  for (int f = 0; f < 4; ++f) {
    const auto s = [&](int i) { return "sine" + std::to_string(i % 4); };
    const auto n = [&](int i) { return "noise" + std::to_string(i % 4); };
    const auto c = [&](int i) { return "chirp" + std::to_string(i % 4); };
    out.push_back({s(f), s(f + 1), n(f)});
    out.push_back({n(f), n(f + 1), c(f)});
    out.push_back({c(f), c(f + 1), s(f)});
    out.push_back({s(f), s(f + 1), c(f)});
    out.push_back({n(f), n(f + 1), s(f)});
  }
  return out;
}

}  // namespace detail

inline DemoCorpus make_demo(std::uint64_t seed = 1) {
  DemoCorpus demo;
  constexpr double kSeconds = 2.0;
  for (int i = 0; i < 4; ++i) {
    const std::string sid = "sine" + std::to_string(i);
    const std::string nid = "noise" + std::to_string(i);
    const std::string cid = "chirp" + std::to_string(i);
    demo.audio[sid] = detail::synth_sine(430.0 + 8.0 * i, 0.5, kSeconds, seed + 10 + i);
    demo.audio[nid] = detail::synth_noise(0.3, kSeconds, seed + 20 + i);
    demo.audio[cid] =
        detail::synth_chirp(900.0 + 25.0 * i, 1800.0 + 25.0 * i, 0.4, kSeconds, seed + 30 + i);
    demo.corpus.add_clip({sid, {}, {"sine"}});
    demo.corpus.add_clip({nid, {}, {"noise"}});
    demo.corpus.add_clip({cid, {}, {"chirp"}});
  }

  demo.corpus.constraints = detail::demo_constraints();
  for (int f = 0; f < 4; ++f) {
    FoldAssignment fold;
    fold.fold_index = f;
    for (int i = 0; i < 20; ++i) {
      if (i / 5 == f)
        fold.test_constraints.push_back(demo.corpus.constraints[static_cast<std::size_t>(i)]);
      else
        fold.train_constraints.push_back(demo.corpus.constraints[static_cast<std::size_t>(i)]);
    }
    demo.corpus.folds.push_back(std::move(fold));
  }
  return demo;
}

/// MFCCdd features for every demo clip (the features the pipeline would
/// extract from the generated WAV files).
inline std::map<std::string, Matrix> demo_features(const DemoCorpus& demo,
                                                   const WindowingConfig& cfg = {}) {
  std::map<std::string, Matrix> out;
  for (const auto& [id, buf] : demo.audio) out[id] = compute_mfccdd(buf, cfg);
  return out;
}

/// Method parameters sized for the 12-clip demo: small k, every training
/// clip in the vocabulary sample, single predicted tag.
inline MethodSpec demo_method(Space space) {
  MethodSpec m;
  m.space = space;
  m.k = 8;
  m.vocab_max_clips = 12;
  m.n_tags = 1;
  m.w = 0.9;
  return m;
}

/// Write the demo corpus to disk in the exact layout the CLI consumes:
/// audio/<clip>.wav, annotations.tsv, constraints.txt, folds/fold<i>.*.
inline void write_demo_corpus(const std::filesystem::path& dir, std::uint64_t seed = 1) {
  const DemoCorpus demo = make_demo(seed);
  std::filesystem::create_directories(dir / "audio");
  std::filesystem::create_directories(dir / "folds");

  for (const auto& [id, buf] : demo.audio)
    write_wav_pcm16(dir / "audio" / (id + ".wav"), buf);

  {
    std::ofstream out(dir / "annotations.tsv");
    if (!out) throw IoError("cannot write " + (dir / "annotations.tsv").string());
    for (const auto& [id, clip] : demo.corpus.clips()) {
      out << id << '\t';
      bool first = true;
      for (const std::string& tag : clip.tags) {
        if (!first) out << ',';
        out << tag;
        first = false;
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "constraints.txt");
    if (!out) throw IoError("cannot write " + (dir / "constraints.txt").string());
    for (const TripletConstraint& t : demo.corpus.constraints)
      out << t.a << ' ' << t.b << ' ' << t.c << '\n';
  }
  for (const FoldAssignment& fold : demo.corpus.folds) {
    const auto write_side = [&](const char* ext, const std::vector<TripletConstraint>& list) {
      const auto path = dir / "folds" / ("fold" + std::to_string(fold.fold_index) + ext);
      std::ofstream out(path);
      if (!out) throw IoError("cannot write " + path.string());
      for (const TripletConstraint& t : list) out << t.a << ' ' << t.b << ' ' << t.c << '\n';
    };
    write_side(".train", fold.train_constraints);
    write_side(".test", fold.test_constraints);
  }
}

}  // namespace adsm::demo
