#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "mvlab/error.hpp"
#include "mvlab/ingest.hpp"
#include "synth.hpp"

using namespace mvlab;
namespace fs = std::filesystem;

namespace {

const fs::path kAnnotations = fs::path(MVLAB_FIXTURES) / "annotations";

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("mvlab_ingest_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("fixture directory ingests with one failure") {
  const auto r = ingest(kAnnotations, IngestConfig{{}, 2});
  CHECK(r.report.files_read == 4);
  CHECK(r.report.succeeded == 3);
  REQUIRE(r.report.failures.size() == 1);
  CHECK(r.report.failures[0].file == "broken.json");
  CHECK(r.report.failures[0].reason.find("E_MALFORMED") != std::string::npos);
  CHECK(r.report.non_guillotine == 1);
  CHECK(r.report.non_converged == 1);
  CHECK(r.report.summary().find("3") != std::string::npos);

  const auto& lib = r.library;
  REQUIRE(lib.corpus.n() == 3);
  CHECK(lib.codes.size() == 3);
  CHECK(lib.tensors.size() == 3);
  const auto fig4 = lib.index_of_doi("10.1000/fig4");
  REQUIRE(fig4.has_value());
  const auto& meta = lib.corpus.items[*fig4].metadata;
  REQUIRE(meta.has_value());
  CHECK(meta->title == "Composite dashboard, annotated");
  CHECK(meta->year == 2019);
  CHECK(tiles_unit_square(lib.corpus.items[*fig4]));
  const auto halves = *lib.index_of_doi("10.1000/halves");
  CHECK(lib.codes[halves].str() == "2A");
  const auto pin = *lib.index_of_doi("10.1000/pinwheel");
  CHECK(lib.codes[pin].str() == "5Z1");
  CHECK(lib.non_guillotine[pin]);
  CHECK_FALSE(lib.converged[pin]);
  CHECK_FALSE(lib.index_of_doi("10.1000/broken").has_value());
  CHECK(lib.entries().size() == 3);
}

TEST_CASE("ingest is deterministic across thread counts") {
  const auto a = ingest(kAnnotations, IngestConfig{{}, 1});
  const auto b = ingest(kAnnotations, IngestConfig{{}, 4});
  CHECK(a.library.corpus == b.library.corpus);
  CHECK(a.library.codes == b.library.codes);
  CHECK(a.library.tensors == b.library.tensors);
  CHECK(a.library.registry == b.library.registry);
}

TEST_CASE("ingest errors") {
  TempDir empty;
  try {
    (void)ingest(empty.path);
    FAIL("expected E_NO_FILES");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoFiles);
  }
  try {
    (void)ingest(empty.path / "missing");
    FAIL("expected E_IO");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
  IngestConfig bad;
  bad.refinement.theta_fraction = 0.0;
  CHECK_THROWS_AS(ingest(kAnnotations, bad), Error);
}

TEST_CASE("duplicate dois are rejected") {
  TempDir dir;
  fs::copy_file(kAnnotations / "10.1000%2Fhalves.json", dir.path / "a.json");
  fs::copy_file(kAnnotations / "10.1000%2Fhalves.json", dir.path / "b.json");
  const auto r = ingest(dir.path);
  CHECK(r.report.succeeded == 1);
  REQUIRE(r.report.failures.size() == 1);
  CHECK(r.report.failures[0].file == "b.json");
}

TEST_CASE("derived directory round trip") {
  const auto r = ingest(kAnnotations);
  TempDir out;
  save_derived(r.library, out.path);
  CHECK(is_derived_dir(out.path));
  CHECK_FALSE(is_derived_dir(kAnnotations));
  CHECK(fs::exists(out.path / "refined" / "10.1000%2Ffig4.json"));

  const auto back = load_derived(out.path);
  CHECK(back.corpus == r.library.corpus);
  CHECK(back.codes == r.library.codes);
  CHECK(back.tensors == r.library.tensors);
  CHECK(back.registry == r.library.registry);
  CHECK(back.converged == r.library.converged);
  CHECK(back.non_guillotine == r.library.non_guillotine);

  const auto csv = slurp(out.path / "cooccurrence.csv");
  std::istringstream lines(csv);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 14);
  }
  CHECK(rows == 15);

  const auto bytes = slurp(out.path / "tensors.bin");
  CHECK(bytes.substr(0, 4) == "MVTN");
  CHECK(bytes.size() == 4 + 4 + 8 + 4 + 3 * kTensorSize * 8);
}

TEST_CASE("stale caches are rebuilt") {
  const auto r = ingest(kAnnotations);
  TempDir out;
  save_derived(r.library, out.path);
  {
    std::ofstream(out.path / "tensors.bin", std::ios::binary | std::ios::trunc) << "MVTN garbage";
    std::ofstream(out.path / "registry.json", std::ios::trunc) << R"({"entries": []})";
  }
  const auto back = load_derived(out.path);
  CHECK(back.tensors == r.library.tensors);
  CHECK(back.codes == r.library.codes);

  fs::remove(out.path / "tensors.bin");
  fs::remove(out.path / "registry.json");
  const auto again = load_derived(out.path);
  CHECK(again.tensors == r.library.tensors);

  fs::remove(out.path / "refined" / "10.1000%2Fhalves.json");
  try {
    (void)load_derived(out.path);
    FAIL("expected E_IO");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("design json keeps every bit") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    auto mv = synth::random_mv(2 + i % 7, rng, "10.5/r" + std::to_string(i));
    mv.metadata->venue = "VIS";
    mv.metadata->year = 2000 + i;
    const auto text = serialize_design(mv);
    CHECK(parse_design(text) == mv);
    CHECK(serialize_design(parse_design(text)) == text);
  }
  CHECK_THROWS_AS(parse_design("{"), Error);
  CHECK_THROWS_AS(parse_design(R"({"views": [{"id": "1", "type": "Pie", "x": 0.5, "y": 0.5, "w": 1, "h": 1}]})"),
                  Error);
}

TEST_CASE("tensor cache encoding") {
  std::vector<CompositionTensor> ts(2);
  ts[0].values[0] = 0.25;
  ts[1].values[125] = 1.0 / 3.0;
  const auto bytes = encode_tensors(ts);
  const auto back = decode_tensors(bytes);
  REQUIRE(back.has_value());
  CHECK(*back == ts);
  CHECK_FALSE(decode_tensors(bytes.substr(0, bytes.size() - 1)).has_value());
  CHECK_FALSE(decode_tensors("XXXX").has_value());
  auto wrong_version = bytes;
  wrong_version[4] = 9;
  CHECK_FALSE(decode_tensors(wrong_version).has_value());
  CHECK(decode_tensors(encode_tensors({}))->empty());
}
