// ingest.hpp - annotation directory -> refined, encoded corpus, and the
// derived/ directory that caches it.
//
// derived/ layout:
//   manifest.json        schema version, refinement settings, MV order
//   refined/<doi>.json   refined design, full double precision
//   registry.json        layout signature -> letter
//   cooccurrence.csv     14x14 conditional probabilities, header row and column
//   tensors.bin          "MVTN", u32 version, u64 rows, u32 cols (126), then
//                        rows x cols little-endian float64 in manifest order

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvlab/analytics.hpp"
#include "mvlab/encoding.hpp"
#include "mvlab/model.hpp"
#include "mvlab/recommender.hpp"
#include "mvlab/refine.hpp"

namespace mvlab {

inline constexpr int kDerivedSchemaVersion = 1;
inline constexpr std::uint32_t kTensorCacheVersion = 1;

struct IngestConfig {
  RefinementConfig refinement;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

struct IngestFailure {
  std::string file;
  std::string reason;
};

struct IngestReport {
  std::size_t files_read = 0;
  std::size_t succeeded = 0;
  std::vector<IngestFailure> failures;
  std::size_t non_guillotine = 0;
  std::size_t non_converged = 0;
  std::size_t registry_size = 0;
  double elapsed_seconds = 0.0;
  std::vector<std::string> warnings;

  std::string summary() const;
};

/// A corpus with everything the analytics, recommender and service need.
/// All vectors are parallel to corpus.items.
struct Library {
  Corpus corpus;
  LayoutRegistry registry;
  std::vector<LayoutCode> codes;
  std::vector<CompositionTensor> tensors;
  std::vector<bool> non_guillotine;
  std::vector<bool> converged;
  RefinementConfig refinement;

  std::optional<std::size_t> index_of_doi(std::string_view doi) const;
  std::vector<CorpusEntry> entries() const;
};

struct IngestResult {
  Library library;
  IngestReport report;
};

/// Reads every *.json in `dir` in file-name order, plus an optional
/// corpus.csv with metadata. Files that fail any stage are reported and
/// skipped. Throws E_NO_FILES, E_IO.
IngestResult ingest(const std::filesystem::path& dir, const IngestConfig& cfg = {});

/// Throws E_IO.
void save_derived(const Library& lib, const std::filesystem::path& out_dir);

/// Rebuilds a missing or stale registry or tensor cache from the refined
/// designs. Throws E_IO when the manifest or a refined design is unreadable.
Library load_derived(const std::filesystem::path& dir);

/// True when `dir` holds a derived/ manifest.
bool is_derived_dir(const std::filesystem::path& dir);

/// Full-precision JSON form of a refined design, as stored under refined/.
std::string serialize_design(const MVDesign& mv);
/// Throws E_MALFORMED, E_BAD_TYPE.
MVDesign parse_design(std::string_view text);

/// 14x14 CSV with a header row and a leading type column; missing columns are empty cells.
std::string cooccurrence_csv(const CoOccurrenceMatrix& m);

std::string encode_tensors(const std::vector<CompositionTensor>& tensors);
/// nullopt when the bytes are not a version-matching tensor cache.
std::optional<std::vector<CompositionTensor>> decode_tensors(std::string_view bytes);

}  // namespace mvlab
