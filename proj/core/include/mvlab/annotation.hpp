// annotation.hpp - per-MV annotation files (pixel geometry) and their
// conversion into the normalized model.
//
// File schema (all geometry is center/size in image pixels):
//
//   {
//     "doi": "10.1109/TVCG.2018.2864899",
//     "image":   {"w": 1600, "h": 900},
//     "display": {"x": 800, "y": 450, "w": 1500, "h": 860},
//     "views": [
//       {"id": "1", "type": "Bar", "x": 200, "y": 450, "w": 300, "h": 860},
//       {"id": "2", "type": "Line",
//        "small multiples": [
//          {"id": "2.1", "type": "Line", "x": ..., "y": ..., "w": ..., "h": ...},
//          {"id": "2.2", "type": "Line", "x": ..., "y": ..., "w": ..., "h": ...}]}
//     ],
//     "metadata": {"venue": "VAST", "year": 2018, "title": "...", "authors": ["..."]}
//   }
//
// docs/annotation-format.md has the full description.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvlab/model.hpp"

namespace mvlab {

using PixelRect = BBox;

struct RawView {
  std::string id;
  /// Optional on a small multiples container; its children inherit it.
  std::optional<ViewType> type;
  /// Optional on a small multiples container.
  std::optional<PixelRect> rect;
  std::vector<RawView> small_multiples;

  bool is_group() const noexcept { return !small_multiples.empty(); }

  friend bool operator==(const RawView&, const RawView&) = default;
};

struct AnnotatedMV {
  std::string doi;
  double image_w = 0.0;
  double image_h = 0.0;
  PixelRect display;
  std::vector<RawView> views;
  std::optional<Metadata> metadata;

  friend bool operator==(const AnnotatedMV&, const AnnotatedMV&) = default;
};

/// Throws Error with E_MALFORMED, E_BAD_TYPE or E_BAD_GEOMETRY.
AnnotatedMV parse_annotation(std::string_view bytes);

/// Canonical form: sorted keys, 2-space indentation, reals with six decimals.
std::string serialize_annotation(const AnnotatedMV& a);

struct NormalizeResult {
  MVDesign design;
  std::vector<std::string> warnings;
};

/// Clips every rectangle to the display and maps the display onto the unit
/// square. Throws E_EMPTY_DISPLAY or E_ALL_CLIPPED.
NormalizeResult normalize(const AnnotatedMV& a);

/// "10.1109/TVCG.2018.1" -> "10.1109%2FTVCG.2018.1.json"
std::string doi_to_filename(std::string_view doi);
/// Inverse of doi_to_filename on the file stem.
std::string doi_from_stem(std::string_view stem);

/// corpus.csv: header "doi,venue,year,title[,authors]", authors separated by ';'.
std::map<std::string, Metadata> parse_corpus_index(std::string_view csv);

/// Fills metadata fields missing from `a` using the index row for its doi.
void enrich_metadata(AnnotatedMV& a, const std::map<std::string, Metadata>& index);

}  // namespace mvlab
