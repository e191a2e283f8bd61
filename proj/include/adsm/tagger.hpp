#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "adsm/embed.hpp"
#include "adsm/error.hpp"
#include "adsm/log.hpp"
#include "adsm/matrix.hpp"

namespace adsm {

struct TagPrediction {
  std::string tag;
  double score = 0.0;  // cosine similarity in [-1, 1]
  int rank = 0;        // 1-based
};

/// Rank every tag against the clip embedding by cosine similarity over the
/// PPMI tag rows and keep the top N. Scores come back non-increasing; exact
/// ties are broken by lexicographic tag order so folds replay identically.
inline std::vector<TagPrediction> autotag(std::span<const double> clip_embedding,
                                          const TagMatrix& tm, int n) {
  if (tm.tag_count() == 0) throw ValidationError("autotag: empty tag matrix");
  if (n < 1) throw ValidationError("autotag: N must be >= 1");
  if (static_cast<std::size_t>(n) > tm.tag_count()) {
    log::warn("autotag: N=", n, " exceeds tag count ", tm.tag_count(), "; truncating");
    n = static_cast<int>(tm.tag_count());
  }

  std::vector<std::size_t> order(tm.tag_count());
  std::vector<double> scores(tm.tag_count());
  for (std::size_t t = 0; t < tm.tag_count(); ++t) {
    order[t] = t;
    scores[t] = cosine(clip_embedding, tm.ppmi.row(t));
  }
  // tags are stored sorted, so index order is the lexicographic tiebreak
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<TagPrediction> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t t = order[static_cast<std::size_t>(i)];
    out.push_back({tm.tags[t], scores[t], i + 1});
  }
  return out;
}

/// Convenience: just the tag names of the top-N predictions.
inline std::vector<std::string> autotag_names(std::span<const double> clip_embedding,
                                              const TagMatrix& tm, int n) {
  std::vector<std::string> names;
  for (const TagPrediction& p : autotag(clip_embedding, tm, n)) names.push_back(p.tag);
  return names;
}

}  // namespace adsm
