// recommender.hpp - exemplar retrieval by mutual information between
// composition tensors.
//
// A composition tensor spreads the position-grid mass of every leaf view over
// a 3x3x14 array (grid row, grid column, view type). Two tensors are compared
// by flattening them to 126 values, binning both with one equal-width
// partition of [0, max of either], and taking the mutual information of the
// paired bin labels.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvlab/analytics.hpp"
#include "mvlab/encoding.hpp"
#include "mvlab/model.hpp"

namespace mvlab {

inline constexpr std::size_t kTensorSize = 9 * kViewTypeCount;

struct CompositionTensor {
  /// Flattened (row, column, type), type varying fastest.
  std::array<double, kTensorSize> values{};

  double& at(std::size_t row, std::size_t col, ViewType t) noexcept {
    return values[(row * 3 + col) * kViewTypeCount + index_of(t)];
  }
  double at(std::size_t row, std::size_t col, ViewType t) const noexcept {
    return values[(row * 3 + col) * kViewTypeCount + index_of(t)];
  }
  double total() const noexcept;

  friend bool operator==(const CompositionTensor&, const CompositionTensor&) = default;
};

struct MIConfig {
  int bins = 8;

  /// Throws E_INVALID_ARGUMENT when bins < 2.
  void check() const;
};

struct SketchView {
  ViewType type = ViewType::Panel;
  /// Center/size in canvas units.
  BBox rect;
};

struct UserSketch {
  std::vector<SketchView> views;
  double canvas_w = 0.0;
  double canvas_h = 0.0;
};

/// {"canvas": {"w", "h"}, "views": [{"type", "x", "y", "w", "h"}, ...]}.
/// Throws E_MALFORMED, E_BAD_TYPE, E_BAD_GEOMETRY.
UserSketch parse_sketch(std::string_view json_text);

struct Recommendation {
  std::string doi;
  double score = 0.0;
  LayoutCode layout;
  std::size_t view_count = 0;
  std::size_t rank = 0;  // 1-based
};

/// Throws E_NOT_REFINED when level-1 views overlap or leave the display.
CompositionTensor composition_tensor(const MVDesign& mv);

/// Normalizes the sketch against the smallest rectangle enclosing its views.
/// Throws E_EMPTY_SKETCH.
CompositionTensor sketch_tensor(const UserSketch& s);

/// Sketch views mapped into the unit square spanned by their enclosing box.
std::vector<View> normalized_sketch_views(const UserSketch& s);

/// Upper end of the shared discretization range of a pair.
double shared_upper(std::span<const double> a, std::span<const double> b) noexcept;

/// Equal-width labels over [0, upper]; the top value is clamped into the last
/// bin and values within 1e-9 bin widths below a boundary are moved up to it.
std::vector<int> discretize(std::span<const double> values, double upper, const MIConfig& cfg);

/// Natural-log mutual information of two paired label sequences.
double mutual_information_from_labels(std::span<const int> x, std::span<const int> y);

double mutual_information(const CompositionTensor& a, const CompositionTensor& b,
                          const MIConfig& cfg = {});

struct CorpusEntry {
  std::string doi;
  CompositionTensor tensor;
  LayoutCode layout;
  std::size_t view_count = 0;
};

/// Scores every entry, keeps those whose view count is in `view_counts`
/// (all when empty), sorts by score descending then doi ascending and keeps
/// the first `top_k` (all when 0). Throws E_EMPTY_SKETCH, E_EMPTY_CORPUS.
std::vector<Recommendation> recommend(std::span<const CorpusEntry> corpus, const UserSketch& s,
                                      const std::set<std::size_t>& view_counts, std::size_t top_k,
                                      const MIConfig& cfg = {});

/// Column `t` of the conditional probability matrix, descending, without t
/// itself and without zero or missing entries; all when top_k is 0.
/// Throws E_MISSING_TYPE.
std::vector<std::pair<ViewType, double>> correlated_types(ViewType t, const CoOccurrenceMatrix& m,
                                                          std::size_t top_k);

enum class AlignMode { Left, Right, Top, Bottom, CenterH, CenterV };

std::optional<AlignMode> parse_align_mode(std::string_view name) noexcept;

/// Edges go to the selection extremum, centers to the selection mean; sizes are kept.
/// Throws E_TOO_FEW for fewer than two boxes.
std::vector<BBox> align_views(std::span<const BBox> selection, AlignMode mode);

struct AppliedLayout {
  MVDesign design;
  /// For each sketch view, the index of the template leaf slot it landed in.
  std::vector<std::size_t> slot_of_view;
};

/// Places sketch views into template slots: same-type matches first, then by
/// smallest relative-position-change, slots visited by decreasing area.
/// Throws E_TEMPLATE_TOO_SMALL.
AppliedLayout apply_layout(const MVDesign& templ, const UserSketch& s);

}  // namespace mvlab
