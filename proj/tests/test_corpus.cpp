#include "adsm/corpus.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "adsm/io.hpp"
#include "adsm/rng.hpp"
#include "test_util.hpp"

using namespace adsm;
using testutil::TempDir;
using testutil::write_text;

TEST_CASE("annotations: tagless clip is retained") {
  TempDir dir("ann");
  write_text(dir / "a.tsv", "19920\t\n");
  const auto clips = load_annotations(dir / "a.tsv");
  REQUIRE(clips.size() == 1);
  CHECK(clips[0].clip_id == "19920");
  CHECK(clips[0].tags.empty());
}

TEST_CASE("annotations: comma-separated tags") {
  TempDir dir("ann");
  write_text(dir / "a.tsv", "3843\tindian,sitar\n");
  const auto clips = load_annotations(dir / "a.tsv");
  REQUIRE(clips.size() == 1);
  CHECK(clips[0].tags == std::set<std::string>{"indian", "sitar"});
}

TEST_CASE("annotations: dedup, trim, lowercase") {
  TempDir dir("ann");
  write_text(dir / "a.tsv", "x\ta,a,A \n");
  const auto clips = load_annotations(dir / "a.tsv");
  REQUIRE(clips.size() == 1);
  CHECK(clips[0].tags == std::set<std::string>{"a"});
}

TEST_CASE("annotations: duplicate clip id is a conflict") {
  TempDir dir("ann");
  write_text(dir / "a.tsv", "x\ta\nx\tb\n");
  CHECK_THROWS_AS(load_annotations(dir / "a.tsv"), ConflictError);
}

TEST_CASE("annotations: empty id is a parse error with line number") {
  TempDir dir("ann");
  write_text(dir / "a.tsv", "ok\ta\n\tb\n");
  try {
    load_annotations(dir / "a.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("annotations: binary-matrix variant, metadata columns ignored") {
  TempDir dir("ann");
  write_text(dir / "a.csv",
             "\"clip_id\",\"rock\",\"sitar\",\"mp3_path\"\n"
             "\"3843\",\"0\",\"1\",\"f/3843.mp3\"\n"
             "\"9531\",\"1\",\"0\",\"f/9531.mp3\"\n");
  const auto clips = load_annotations(dir / "a.csv", AnnotationFormat::kBinaryMatrixCsv);
  REQUIRE(clips.size() == 2);
  CHECK(clips[0].tags == std::set<std::string>{"sitar"});
  CHECK(clips[1].tags == std::set<std::string>{"rock"});
}

TEST_CASE("corpus: tag vocabulary is the sorted union, independent of order") {
  Corpus c1, c2;
  c1.add_clip({"a", {}, {"zeta", "alpha"}});
  c1.add_clip({"b", {}, {"mid"}});
  c2.add_clip({"b", {}, {"mid"}});
  c2.add_clip({"a", {}, {"zeta", "alpha"}});
  const std::vector<std::string> expected{"alpha", "mid", "zeta"};
  CHECK(c1.tag_vocabulary() == expected);
  CHECK(c2.tag_vocabulary() == expected);
}

namespace {

Corpus three_clip_corpus() {
  Corpus c;
  c.add_clip({"a", {}, {}});
  c.add_clip({"b", {}, {}});
  c.add_clip({"c", {}, {}});
  return c;
}

}  // namespace

TEST_CASE("constraints: whitespace and comma separated, order preserved") {
  TempDir dir("con");
  write_text(dir / "c.txt", "a b c\nb,c,a\n");
  const Corpus corpus = three_clip_corpus();
  const auto cons = load_constraints(dir / "c.txt", corpus);
  REQUIRE(cons.size() == 2);
  CHECK(cons[0] == TripletConstraint{"a", "b", "c"});
  CHECK(cons[1] == TripletConstraint{"b", "c", "a"});
}

TEST_CASE("constraints: non-distinct triplet rejected") {
  TempDir dir("con");
  write_text(dir / "c.txt", "a b a\n");
  CHECK_THROWS_AS(load_constraints(dir / "c.txt", three_clip_corpus()), ValidationError);
}

TEST_CASE("constraints: unknown id names the offender") {
  TempDir dir("con");
  write_text(dir / "c.txt", "a b zz\n");
  try {
    load_constraints(dir / "c.txt", three_clip_corpus());
    FAIL("expected ResolutionError");
  } catch (const ResolutionError& e) {
    CHECK(std::string(e.what()).find("zz") != std::string::npos);
  }
}

TEST_CASE("constraints: wrong token count is a parse error") {
  TempDir dir("con");
  write_text(dir / "c.txt", "a b\n");
  CHECK_THROWS_AS(load_constraints(dir / "c.txt", three_clip_corpus()), ParseError);
  write_text(dir / "d.txt", "a b c a\n");
  CHECK_THROWS_AS(load_constraints(dir / "d.txt", three_clip_corpus()), ParseError);
}

TEST_CASE("constraints: duplicates preserved, length equals line count") {
  TempDir dir("con");
  write_text(dir / "c.txt", "a b c\na b c\na c b\n");
  const auto cons = load_constraints(dir / "c.txt", three_clip_corpus());
  REQUIRE(cons.size() == 3);
  CHECK(cons[0] == cons[1]);
}

TEST_CASE("folds: valid single synthetic fold") {
  TempDir dir("folds");
  write_text(dir / "fold0.train", "a b c\nb a c\n");
  write_text(dir / "fold0.test", "a c b\n");
  const auto folds = load_folds_dir(dir.path(), three_clip_corpus());
  REQUIRE(folds.size() == 1);
  CHECK(folds[0].train_constraints.size() == 2);
  CHECK(folds[0].test_constraints.size() == 1);
}

TEST_CASE("folds: train/test overlap rejected") {
  TempDir dir("folds");
  write_text(dir / "fold0.train", "a b c\n");
  write_text(dir / "fold0.test", "a b c\n");
  CHECK_THROWS_AS(load_folds_dir(dir.path(), three_clip_corpus()), ValidationError);
}

TEST_CASE("fold helpers: test clips and train clip complement") {
  Corpus corpus = three_clip_corpus();
  corpus.add_clip({"d", {}, {}});
  FoldAssignment fold;
  fold.test_constraints = {{"a", "b", "c"}};
  CHECK(test_clip_ids(fold) == std::set<std::string>{"a", "b", "c"});
  CHECK(train_clip_ids(corpus, fold) == std::vector<std::string>{"d"});
}

TEST_CASE("features file: bit-exact round trip of a 3x39 matrix") {
  TempDir dir("fv");
  Rng rng(7);
  const Matrix m = testutil::random_matrix(3, 39, rng);
  io::export_features(dir / "m.fv", m);
  CHECK(io::import_features(dir / "m.fv") == m);
}

TEST_CASE("features file: round trip property over random shapes") {
  TempDir dir("fv");
  Rng rng(1234);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t rows = 1 + rng.below(40);
    const std::size_t cols = 1 + rng.below(64);
    Matrix m = testutil::random_matrix(rows, cols, rng, -1e6, 1e6);
    // exercise special values too
    if (trial % 3 == 0) m.data[0] = 0.0;
    if (trial % 5 == 0) m.data.back() = 1e-300;
    io::export_features(dir / "m.fv", m);
    REQUIRE(io::import_features(dir / "m.fv") == m);
  }
}

TEST_CASE("features file: 24-column CSV import (external feature path)") {
  TempDir dir("fv");
  std::string csv;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 24; ++c) csv += (c ? "," : "") + std::to_string(0.25 * c + r);
    csv += "\n";
  }
  write_text(dir / "e.csv", csv);
  const Matrix m = io::import_features(dir / "e.csv");
  CHECK(m.rows == 3);
  CHECK(m.cols == 24);
  CHECK(m(1, 2) == 0.5 + 1.0);
}

TEST_CASE("features file: header/payload mismatch is a format error") {
  TempDir dir("fv");
  Rng rng(9);
  const Matrix m = testutil::random_matrix(2, 39, rng);
  std::string bytes = io::encode_fv(m);
  bytes.resize(bytes.size() - 8);  // drop one value: rows say 2x39, payload is short
  write_text(dir / "bad.fv", bytes);
  CHECK_THROWS_AS(io::import_features(dir / "bad.fv"), FormatError);
}

TEST_CASE("features file: ragged CSV is a format error") {
  TempDir dir("fv");
  write_text(dir / "bad.csv", "1,2,3\n4,5\n");
  CHECK_THROWS_AS(io::import_features(dir / "bad.csv"), FormatError);
}

TEST_CASE("features file: empty matrix refuses to export") {
  TempDir dir("fv");
  CHECK_THROWS_AS(io::export_features(dir / "e.fv", Matrix{}), ValidationError);
}
