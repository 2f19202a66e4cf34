// refine.hpp - bottom-up removal of the gaps and overlaps left by manual
// annotation.
//
// Small multiples children are aligned inside their enclosing group box
// first. Level-1 boxes are then merged pairwise, bottom-up: two boxes merge
// when their centers see each other, they line up horizontally (or
// vertically) with near-equal heights (or widths), and together they form a
// rectangle. Every merge aligns the two members to the new group box, and
// the change is pushed down to every box nested inside them. The loop ends
// with a single box, which is stretched onto the display.

#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvlab/model.hpp"

namespace mvlab {

struct RefinementConfig {
  /// Threshold as a fraction of the mean of the group box width and height.
  double theta_fraction = 0.03;
  int max_iterations = 100;

  /// Throws E_INVALID_ARGUMENT unless 0 < theta_fraction < 0.5 and max_iterations >= 1.
  void check() const;
};

/// theta for a group: `fraction` of the average of its width and height.
double group_theta(const BBox& group, double fraction) noexcept;

/// Smallest axis-aligned rectangle containing all boxes. Throws E_EMPTY.
BBox enclosing_box(std::span<const BBox> boxes);

/// Index pairs (i < j) whose center-to-center segment crosses no third box's interior.
std::set<std::pair<std::size_t, std::size_t>> neighbors(std::span<const BBox> boxes);

/// Horizontally aligned with near-equal heights, or vertically aligned with
/// near-equal widths. The bound is inclusive.
bool groupable(const BBox& a, const BBox& b, double theta) noexcept;

struct GroupBox {
  std::vector<BBox> members;
  BBox bbox_g;

  static GroupBox enclosing(std::vector<BBox> members);
};

struct AlignResult {
  std::vector<BBox> boxes;
  /// Human-readable descriptions of discrepancies that stayed >= theta.
  std::vector<std::string> unresolved;

  bool resolved() const noexcept { return unresolved.empty(); }
};

/// Snaps member edges within theta of the group edges onto them, then moves
/// neighbouring edges closer than theta onto the midpoint of the discrepancy.
/// A group that still has gaps or overlaps afterwards is reported (E_UNRESOLVABLE)
/// through AlignResult::unresolved rather than thrown.
AlignResult align_group(const GroupBox& group, double theta);

struct RefineResult {
  MVDesign design;
  /// False when the merge loop stopped with more than one box (E_NONCONVERGENT).
  bool converged = false;
  /// Set together with !converged: the layout is not a guillotine partition
  /// the loop could reduce.
  bool non_guillotine = false;
  int iterations = 0;
  std::vector<std::string> warnings;
};

RefineResult refine(const MVDesign& mv, const RefinementConfig& cfg = {});

}  // namespace mvlab
