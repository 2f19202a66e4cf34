#include "mvlab/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>

namespace mvlab {

namespace {

struct TypeNames {
  ViewType type;
  std::string_view canonical;
  std::string_view short_name;
};

constexpr std::array<TypeNames, kViewTypeCount> kTypeNames = {{
    {ViewType::Area, "Area", "Area"},
    {ViewType::Bar, "Bar", "Bar"},
    {ViewType::Circle, "Circle", "Circle"},
    {ViewType::Diagram, "Diagram", "Diag."},
    {ViewType::Distribution, "Distribution", "Distri."},
    {ViewType::GridMatrix, "GridMatrix", "Grid"},
    {ViewType::Line, "Line", "Line"},
    {ViewType::Map, "Map", "Map"},
    {ViewType::Point, "Point", "Point"},
    {ViewType::Table, "Table", "Table"},
    {ViewType::Text, "Text", "Text"},
    {ViewType::TreesNetworks, "TreesNetworks", "Net."},
    {ViewType::SciVis, "SciVis", "SciVis"},
    {ViewType::Panel, "Panel", "Panel"},
}};

std::optional<int> parse_positive(std::string_view s) {
  if (s.empty() || s.front() == '0') return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || value < 1) return std::nullopt;
  return value;
}

// Area of the union of rectangles by coordinate compression.
double union_area(const std::vector<BBox>& boxes) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& b : boxes) {
    xs.push_back(b.left());
    xs.push_back(b.right());
    ys.push_back(b.top());
    ys.push_back(b.bottom());
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i];
    const double x1 = xs[i + 1];
    if (x1 <= x0) continue;
    const double cx = (x0 + x1) / 2.0;
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double y0 = ys[j];
      const double y1 = ys[j + 1];
      if (y1 <= y0) continue;
      const double cy = (y0 + y1) / 2.0;
      const bool covered = std::any_of(boxes.begin(), boxes.end(), [&](const BBox& b) {
        return b.left() <= cx && cx <= b.right() && b.top() <= cy && cy <= b.bottom();
      });
      if (covered) total += (x1 - x0) * (y1 - y0);
    }
  }
  return total;
}

void check_overlaps(const std::vector<BBox>& boxes, const std::vector<std::string>& ids,
                    ValidationReport& report) {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      const double overlap = intersection_area(boxes[i], boxes[j]);
      if (overlap >= kGeomEps) {
        report.issues.push_back({IssueCode::Overlap, "views " + ids[i] + " and " + ids[j] +
                                                         " overlap by area " +
                                                         std::to_string(overlap)});
      }
    }
  }
}

}  // namespace

const std::array<ViewType, kViewTypeCount>& all_view_types() noexcept {
  static const std::array<ViewType, kViewTypeCount> types = [] {
    std::array<ViewType, kViewTypeCount> out{};
    for (std::size_t i = 0; i < kViewTypeCount; ++i) out[i] = kTypeNames[i].type;
    return out;
  }();
  return types;
}

ViewType view_type_at(std::size_t index) {
  if (index >= kViewTypeCount) throw std::out_of_range("view type index out of range");
  return kTypeNames[index].type;
}

std::string_view canonical_name(ViewType t) noexcept { return kTypeNames[index_of(t)].canonical; }

std::string_view short_name(ViewType t) noexcept { return kTypeNames[index_of(t)].short_name; }

std::optional<ViewType> parse_view_type(std::string_view name) noexcept {
  for (const auto& entry : kTypeNames) {
    if (name == entry.canonical || name == entry.short_name) return entry.type;
  }
  return std::nullopt;
}

double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double w = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double h = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

bool contains(const BBox& outer, const BBox& inner, double eps) noexcept {
  return inner.left() >= outer.left() - eps && inner.right() <= outer.right() + eps &&
         inner.top() >= outer.top() - eps && inner.bottom() <= outer.bottom() + eps;
}

bool inside_unit_square(const BBox& b, double eps) noexcept {
  return contains(BBox{0.5, 0.5, 1.0, 1.0}, b, eps);
}

const BBox& node_bbox(const Node& node) noexcept {
  return std::visit([](const auto& n) -> const BBox& { return n.bbox; }, node);
}

std::string node_id(const Node& node) {
  if (const auto* v = std::get_if<View>(&node)) return v->id;
  return std::to_string(std::get<SmallMultiples>(node).id);
}

std::string MVDesign::doi() const { return metadata ? metadata->doi : std::string{}; }

std::vector<View> leaf_views(const MVDesign& mv) {
  std::vector<View> out;
  out.reserve(leaf_count(mv));
  for (const auto& node : mv.nodes) {
    if (const auto* v = std::get_if<View>(&node)) {
      out.push_back(*v);
    } else {
      const auto& sm = std::get<SmallMultiples>(node);
      out.insert(out.end(), sm.children.begin(), sm.children.end());
    }
  }
  return out;
}

std::size_t leaf_count(const MVDesign& mv) noexcept {
  std::size_t n = 0;
  for (const auto& node : mv.nodes) {
    if (const auto* sm = std::get_if<SmallMultiples>(&node)) {
      n += sm->children.size();
    } else {
      ++n;
    }
  }
  return n;
}

std::string_view to_string(IssueCode code) noexcept {
  switch (code) {
    case IssueCode::Empty: return "E_EMPTY";
    case IssueCode::IdFormat: return "E_ID_FORMAT";
    case IssueCode::OutOfBounds: return "E_OUT_OF_BOUNDS";
    case IssueCode::Overlap: return "W_OVERLAP";
    case IssueCode::Gap: return "W_GAP";
  }
  return "E_UNKNOWN";
}

bool ValidationReport::has_errors() const noexcept {
  return std::any_of(issues.begin(), issues.end(),
                     [](const Issue& i) { return !is_warning(i.code); });
}

bool ValidationReport::contains(IssueCode code) const noexcept {
  return std::any_of(issues.begin(), issues.end(),
                     [code](const Issue& i) { return i.code == code; });
}

std::vector<IssueCode> ValidationReport::codes() const {
  std::vector<IssueCode> out;
  for (const auto& issue : issues) {
    if (std::find(out.begin(), out.end(), issue.code) == out.end()) out.push_back(issue.code);
  }
  return out;
}

bool is_valid_view_id(std::string_view id) noexcept {
  const auto dot = id.find('.');
  if (dot == std::string_view::npos) return parse_positive(id).has_value();
  return parse_positive(id.substr(0, dot)).has_value() &&
         parse_positive(id.substr(dot + 1)).has_value();
}

ValidationReport validate(const MVDesign& mv) {
  ValidationReport report;
  if (leaf_count(mv) < 2) {
    report.issues.push_back({IssueCode::Empty, "an MV arranges two or more views"});
  }

  auto check_box = [&report](const BBox& b, const std::string& id) {
    if (!(b.w > 0.0) || !(b.h > 0.0) || !inside_unit_square(b)) {
      report.issues.push_back({IssueCode::OutOfBounds, "view " + id + " is outside the display"});
    }
  };

  std::set<std::string> seen;
  auto check_unique = [&](const std::string& id) {
    if (!seen.insert(id).second) {
      report.issues.push_back({IssueCode::IdFormat, "duplicate view id " + id});
    }
  };

  std::vector<BBox> level1;
  std::vector<std::string> level1_ids;
  for (const auto& node : mv.nodes) {
    if (const auto* v = std::get_if<View>(&node)) {
      if (!is_valid_view_id(v->id) || v->id.find('.') != std::string::npos) {
        report.issues.push_back({IssueCode::IdFormat, "bad level-1 view id '" + v->id + "'"});
      }
      check_unique(v->id);
      check_box(v->bbox, v->id);
      level1.push_back(v->bbox);
      level1_ids.push_back(v->id);
      continue;
    }
    const auto& sm = std::get<SmallMultiples>(node);
    const std::string gid = std::to_string(sm.id);
    if (sm.id < 1) {
      report.issues.push_back({IssueCode::IdFormat, "bad small multiples id " + gid});
    }
    check_unique(gid);
    check_box(sm.bbox, gid);
    if (sm.children.size() < 2) {
      report.issues.push_back({IssueCode::Empty, "small multiples " + gid +
                                                     " needs at least two views"});
    }
    std::vector<BBox> child_boxes;
    std::vector<std::string> child_ids;
    for (const auto& child : sm.children) {
      const auto dot = child.id.find('.');
      if (!is_valid_view_id(child.id) || dot == std::string::npos ||
          child.id.substr(0, dot) != gid) {
        report.issues.push_back(
            {IssueCode::IdFormat, "child id '" + child.id + "' does not belong to group " + gid});
      }
      check_unique(child.id);
      check_box(child.bbox, child.id);
      if (!contains(sm.bbox, child.bbox)) {
        report.issues.push_back(
            {IssueCode::OutOfBounds, "view " + child.id + " lies outside its group box"});
      }
      child_boxes.push_back(child.bbox);
      child_ids.push_back(child.id);
    }
    check_overlaps(child_boxes, child_ids, report);
    if (!child_boxes.empty() && union_area(child_boxes) < sm.bbox.area() - kAreaEps) {
      report.issues.push_back({IssueCode::Gap, "small multiples " + gid + " has gaps"});
    }
    level1.push_back(sm.bbox);
    level1_ids.push_back(gid);
  }

  check_overlaps(level1, level1_ids, report);
  if (!level1.empty() && union_area(level1) < 1.0 - kAreaEps) {
    report.issues.push_back({IssueCode::Gap, "views leave part of the display uncovered"});
  }
  return report;
}

double level1_area(const MVDesign& mv) noexcept {
  double total = 0.0;
  for (const auto& node : mv.nodes) total += node_bbox(node).area();
  return total;
}

double max_level1_overlap(const MVDesign& mv) noexcept {
  double worst = 0.0;
  for (std::size_t i = 0; i < mv.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < mv.nodes.size(); ++j) {
      worst = std::max(worst, intersection_area(node_bbox(mv.nodes[i]), node_bbox(mv.nodes[j])));
    }
  }
  return worst;
}

bool tiles_unit_square(const MVDesign& mv) noexcept {
  if (mv.nodes.empty()) return false;
  for (const auto& node : mv.nodes) {
    if (!inside_unit_square(node_bbox(node))) return false;
  }
  return std::abs(level1_area(mv) - 1.0) <= kAreaEps && max_level1_overlap(mv) < kGeomEps;
}

}  // namespace mvlab
