// model.hpp - the multiple-view (MV) data model.
//
// An MV is a display space filled by level-1 nodes. A node is either a plain
// view or a small multiples group whose children are level-2 views. Geometry
// is stored as normalized center/size rectangles over the unit square, with y
// growing downwards (row 0 of any grid is the top of the display).

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mvlab {

/// Geometric tolerance for containment and overlap tests.
inline constexpr double kGeomEps = 1e-9;
/// Tolerance on the level-1 area sum of a refined layout.
inline constexpr double kAreaEps = 1e-6;

inline constexpr std::size_t kViewTypeCount = 14;

enum class ViewType : std::uint8_t {
  Area = 0,
  Bar,
  Circle,
  Diagram,
  Distribution,
  GridMatrix,
  Line,
  Map,
  Point,
  Table,
  Text,
  TreesNetworks,
  SciVis,
  Panel,
};

const std::array<ViewType, kViewTypeCount>& all_view_types() noexcept;

inline constexpr std::size_t index_of(ViewType t) noexcept { return static_cast<std::size_t>(t); }
ViewType view_type_at(std::size_t index);

/// "TreesNetworks", "Distribution", ...
std::string_view canonical_name(ViewType t) noexcept;
/// "Net.", "Distri.", "Diag.", ...
std::string_view short_name(ViewType t) noexcept;

/// Accepts canonical names, short names and the "Grid" alias.
std::optional<ViewType> parse_view_type(std::string_view name) noexcept;

/// Center/size rectangle. Normalized (unit-square) when it belongs to an MVDesign;
/// annotation and sketch code reuse it for pixel and canvas units.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const noexcept { return x - w / 2.0; }
  double right() const noexcept { return x + w / 2.0; }
  double top() const noexcept { return y - h / 2.0; }
  double bottom() const noexcept { return y + h / 2.0; }
  double area() const noexcept { return w * h; }

  static BBox from_edges(double left, double top, double right, double bottom) noexcept {
    return {(left + right) / 2.0, (top + bottom) / 2.0, right - left, bottom - top};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

double intersection_area(const BBox& a, const BBox& b) noexcept;
/// True when `inner` lies inside `outer` up to `eps`.
bool contains(const BBox& outer, const BBox& inner, double eps = kGeomEps) noexcept;
bool inside_unit_square(const BBox& b, double eps = kGeomEps) noexcept;

struct View {
  ViewType type = ViewType::Panel;
  BBox bbox;
  std::string id;

  friend bool operator==(const View&, const View&) = default;
};

struct SmallMultiples {
  int id = 0;
  BBox bbox;
  std::vector<View> children;

  friend bool operator==(const SmallMultiples&, const SmallMultiples&) = default;
};

using Node = std::variant<View, SmallMultiples>;

const BBox& node_bbox(const Node& node) noexcept;
std::string node_id(const Node& node);

struct Metadata {
  std::string doi;
  std::string venue;
  std::optional<int> year;
  std::string title;
  std::vector<std::string> authors;

  friend bool operator==(const Metadata&, const Metadata&) = default;
};

struct MVDesign {
  std::vector<Node> nodes;
  std::optional<Metadata> metadata;

  /// Metadata doi, or an empty string.
  std::string doi() const;

  friend bool operator==(const MVDesign&, const MVDesign&) = default;
};

struct Corpus {
  std::vector<MVDesign> items;

  std::size_t n() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Level-1 plain views followed in document order by small multiples children;
/// the containers themselves are not included.
std::vector<View> leaf_views(const MVDesign& mv);

/// Number of leaf views, i.e. leaf_views(mv).size() without the copies.
std::size_t leaf_count(const MVDesign& mv) noexcept;

enum class IssueCode { Empty, IdFormat, OutOfBounds, Overlap, Gap };

std::string_view to_string(IssueCode code) noexcept;
inline bool is_warning(IssueCode code) noexcept {
  return code == IssueCode::Overlap || code == IssueCode::Gap;
}

struct Issue {
  IssueCode code;
  std::string message;
};

struct ValidationReport {
  std::vector<Issue> issues;

  bool empty() const noexcept { return issues.empty(); }
  bool has_errors() const noexcept;
  bool contains(IssueCode code) const noexcept;
  std::vector<IssueCode> codes() const;
};

/// Structural check of every model invariant. Never throws.
ValidationReport validate(const MVDesign& mv);

/// True when `id` is "k" or "k.j" with k, j >= 1.
bool is_valid_view_id(std::string_view id) noexcept;

/// Sum of level-1 node areas.
double level1_area(const MVDesign& mv) noexcept;
/// Largest pairwise intersection area among level-1 nodes.
double max_level1_overlap(const MVDesign& mv) noexcept;
/// The refined-layout invariant: level-1 boxes tile the unit square.
bool tiles_unit_square(const MVDesign& mv) noexcept;

}  // namespace mvlab
