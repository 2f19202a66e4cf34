// analytics.hpp - composition and configuration metrics over a corpus.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mvlab/encoding.hpp"
#include "mvlab/model.hpp"

namespace mvlab {

/// Overlap area of a view with each cell of a 3x3 partition of the display,
/// row-major with cell 0 at the top left. Each value is at most 1/9.
using PositionGrid = std::array<double, 9>;

/// Views counted by view_count_distribution.
enum class CountMode {
  LeafViews,   // every leaf view; small multiples contribute each child
  Level1Nodes, // small multiples count once
};

/// Key used for "10 or more" in the view count histogram.
inline constexpr int kCountBucketMax = 10;

std::map<int, std::size_t> view_count_distribution(const Corpus& c,
                                                   CountMode mode = CountMode::LeafViews);

/// Fraction of MVs containing at least one leaf view of each type.
std::array<double, kViewTypeCount> type_frequency(const Corpus& c);

/// entry(i, j) = P(type_i | type_j). Column j is missing when no MV contains type_j.
class CoOccurrenceMatrix {
 public:
  std::optional<double> at(ViewType i, ViewType given) const noexcept {
    return values_[index_of(i)][index_of(given)];
  }
  bool column_missing(ViewType given) const noexcept {
    return !values_[0][index_of(given)].has_value();
  }
  void set(ViewType i, ViewType given, std::optional<double> v) noexcept {
    values_[index_of(i)][index_of(given)] = v;
  }

  friend bool operator==(const CoOccurrenceMatrix&, const CoOccurrenceMatrix&) = default;

 private:
  std::array<std::array<std::optional<double>, kViewTypeCount>, kViewTypeCount> values_{};
};

/// Off-diagonal: fraction of MVs with type_j that also contain type_i.
/// Diagonal: fraction of MVs with type_i that contain it at least twice.
CoOccurrenceMatrix conditional_probability(const Corpus& c);

/// w / h. Throws E_DEGENERATE when h == 0.
double aspect_ratio(const View& v);

PositionGrid position_grid(const BBox& box) noexcept;
inline PositionGrid position_grid(const View& v) noexcept { return position_grid(v.bbox); }

/// Half the L1 distance between two grids.
double relative_position_change(const PositionGrid& a, const PositionGrid& b) noexcept;

/// Sum of the grids of every leaf view of type t in mv; nullopt if mv has none.
std::optional<PositionGrid> type_grid(const MVDesign& mv, ViewType t);

/// Mean relative-position-change over ordered pairs of MVs containing t.
/// nullopt (E_INSUFFICIENT) when fewer than two MVs contain t.
std::optional<double> stability(const Corpus& c, ViewType t);

/// Same, restricted to the MVs whose code equals `layout`. `codes` is parallel to c.items.
std::optional<double> stability(const Corpus& c, ViewType t, const LayoutCode& layout,
                                std::span<const LayoutCode> codes);

/// Per type, the per-MV summed grid averaged over the MVs containing the type.
std::map<ViewType, PositionGrid> mean_position_by_type(const Corpus& c);

struct AspectStats {
  std::vector<double> samples;  // sorted ascending
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

/// Range used when plotting aspect ratios; samples outside it are kept.
inline constexpr double kAspectDisplayMin = 0.1;
inline constexpr double kAspectDisplayMax = 10.0;

/// Aspect ratios of all leaf views grouped by type; quartiles by linear interpolation.
std::map<ViewType, AspectStats> aspect_stats(const Corpus& c);

struct TypeStats {
  double frequency = 0.0;
  std::optional<AspectStats> aspect;
  std::optional<PositionGrid> mean_position;
};

std::map<ViewType, TypeStats> type_stats(const Corpus& c);

}  // namespace mvlab
