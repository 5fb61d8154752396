#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <unistd.h>

#include "cnvks/errors.hpp"
#include "cnvks/genomic_data.hpp"

using namespace cnvks;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cnvks_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int value = 0;
    return value;
  }
  std::string file(const std::string& name, const std::string& content) {
    const auto p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("intensity TSV round-trips through load and write") {
  TempDir dir;
  const std::string input =
      "marker_id\tposition\tS1\tS2\tS3\n"
      "m1\t10\t0.5\t-0.25\t1\n"
      "m2\t20\t1.5\t2\t-3.125\n"
      "m3\t30\t0\t0.1\t7\n"
      "m4\t40\t-1\t4.75\t0.3\n";
  const auto path = dir.file("track.tsv", input);
  const MarkerTrack track = load_track(path);
  CHECK(track.n_subjects() == 3);
  CHECK(track.n_markers() == 4);
  CHECK(track.locations() == std::vector<std::int64_t>{10, 20, 30, 40});
  CHECK(track.at(1, 0) == -0.25);
  CHECK(track.at(2, 3) == 0.3);

  const auto out_path = (dir.path / "out.tsv").string();
  write_track(track, out_path);
  std::ifstream in(out_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  CHECK(buffer.str() == input);
}

TEST_CASE("unsorted marker rows are sorted by position") {
  TempDir dir;
  const auto path = dir.file("track.tsv",
                             "marker_id\tposition\tS1\tS2\n"
                             "b\t300\t3\t30\n"
                             "a\t100\t1\t10\n"
                             "c\t200\t2\t20\n");
  const MarkerTrack track = load_track(path);
  CHECK(track.locations() == std::vector<std::int64_t>{100, 200, 300});
  CHECK(track.marker_ids() == std::vector<std::string>{"a", "c", "b"});
  CHECK(track.at(0, 0) == 1.0);
  CHECK(track.at(1, 2) == 30.0);
}

TEST_CASE("duplicate locations are rejected") {
  TempDir dir;
  const auto path = dir.file("track.tsv",
                             "marker_id\tposition\tS1\n"
                             "a\t10\t1\n"
                             "b\t10\t2\n"
                             "c\t20\t3\n");
  CHECK(code_of([&] { load_track(path); }) == ErrorCode::DuplicateLocation);
}

TEST_CASE("NaN intensity cells are rejected") {
  TempDir dir;
  const auto path = dir.file("track.tsv",
                             "marker_id\tposition\tS1\tS2\n"
                             "a\t10\t1\tNaN\n");
  CHECK(code_of([&] { load_track(path); }) == ErrorCode::NonFiniteValue);
}

TEST_CASE("malformed rows are rejected with their line number") {
  TempDir dir;
  const auto short_row = dir.file("short.tsv",
                                  "marker_id\tposition\tS1\tS2\n"
                                  "a\t10\t1\n");
  CHECK(code_of([&] { load_track(short_row); }) == ErrorCode::MalformedRow);
  const auto bad_pos = dir.file("pos.tsv",
                                "marker_id\tposition\tS1\n"
                                "a\t-5\t1\n");
  CHECK(code_of([&] { load_track(bad_pos); }) == ErrorCode::MalformedRow);
  const auto bad_value = dir.file("val.tsv",
                                  "marker_id\tposition\tS1\n"
                                  "a\t5\tx1\n");
  CHECK(code_of([&] { load_track(bad_value); }) == ErrorCode::MalformedRow);
}

TEST_CASE("missing files raise IoError") {
  CHECK(code_of([&] { load_track("/nonexistent/track.tsv"); }) == ErrorCode::IoError);
  CHECK(code_of([&] {
          load_phenotype("/nonexistent/phen.txt", PhenotypeKind::continuous);
        }) == ErrorCode::IoError);
}

TEST_CASE("separate locations file joins by row order") {
  TempDir dir;
  const auto intensities = dir.file("intens.tsv",
                                    "marker_id\tS1\tS2\n"
                                    "a\t1\t2\n"
                                    "b\t3\t4\n");
  const auto locations = dir.file("loc.tsv",
                                  "marker_id\tposition\n"
                                  "a\t500\n"
                                  "b\t900\n");
  const MarkerTrack track = load_track(intensities, locations);
  CHECK(track.locations() == std::vector<std::int64_t>{500, 900});
  CHECK(track.at(1, 1) == 4.0);

  const auto mismatched = dir.file("loc_bad.tsv",
                                   "marker_id\tposition\n"
                                   "a\t500\n"
                                   "zzz\t900\n");
  CHECK(code_of([&] { load_track(intensities, mismatched); }) ==
        ErrorCode::MalformedRow);
  const auto too_few = dir.file("loc_few.tsv",
                                "marker_id\tposition\n"
                                "a\t500\n");
  CHECK(code_of([&] { load_track(intensities, too_few); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("continuous phenotype loads values in order") {
  TempDir dir;
  const auto path = dir.file("phen.txt", "0.1\n-1.2\n3.0\n");
  const Phenotype phen = load_phenotype(path, PhenotypeKind::continuous);
  CHECK(phen.values == std::vector<double>{0.1, -1.2, 3.0});
  CHECK(phen.kind == PhenotypeKind::continuous);

  const auto with_header = dir.file("phen2.txt", "phenotype\n0.1\n-1.2\n3.0\n");
  CHECK(load_phenotype(with_header, PhenotypeKind::continuous).size() == 3);
}

TEST_CASE("binary phenotype validation") {
  TempDir dir;
  const auto ok = dir.file("ok.txt", "0\n1\n1\n");
  CHECK(load_phenotype(ok, PhenotypeKind::binary).kind == PhenotypeKind::binary);

  const auto non_binary = dir.file("nb.txt", "0\n1\n2\n");
  CHECK(code_of([&] { load_phenotype(non_binary, PhenotypeKind::binary); }) ==
        ErrorCode::NonBinaryValue);

  const auto one_class = dir.file("oc.txt", "1\n1\n1\n");
  CHECK(code_of([&] { load_phenotype(one_class, PhenotypeKind::binary); }) ==
        ErrorCode::DegenerateGroups);
}

TEST_CASE("phenotype length is checked against the track") {
  TempDir dir;
  const auto path = dir.file("phen.txt", "0.1\n0.2\n");
  CHECK(code_of([&] { load_phenotype(path, PhenotypeKind::continuous, 3); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("in-memory construction enforces the invariants") {
  CHECK(code_of([&] {
          MarkerTrack::create({10, 20}, {}, {1.0, 2.0, 3.0}, 2);
        }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] {
          MarkerTrack::create({10, 10}, {}, {1.0, 2.0, 3.0, 4.0}, 2);
        }) == ErrorCode::DuplicateLocation);
  CHECK(code_of([&] {
          MarkerTrack::create({10, 20}, {}, {1.0, 2.0, 3.0, NAN}, 2);
        }) == ErrorCode::NonFiniteValue);
}
