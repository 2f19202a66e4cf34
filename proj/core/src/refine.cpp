#include "mvlab/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mvlab/error.hpp"

namespace mvlab {

namespace {

// Refinement works on edge coordinates so that shared edges stay bit-identical.
struct Edges {
  double l = 0.0;
  double t = 0.0;
  double r = 0.0;
  double b = 0.0;

  double w() const noexcept { return r - l; }
  double h() const noexcept { return b - t; }
  double area() const noexcept { return w() * h(); }
  BBox box() const noexcept { return BBox::from_edges(l, t, r, b); }

  static Edges of(const BBox& box) noexcept {
    return {box.left(), box.top(), box.right(), box.bottom()};
  }

  friend bool operator==(const Edges&, const Edges&) = default;
};

Edges enclose(const Edges& a, const Edges& b) noexcept {
  return {std::min(a.l, b.l), std::min(a.t, b.t), std::max(a.r, b.r), std::max(a.b, b.b)};
}

double overlap_1d(double a0, double a1, double b0, double b1) noexcept {
  return std::min(a1, b1) - std::max(a0, b0);
}

double intersection(const Edges& a, const Edges& b) noexcept {
  const double w = overlap_1d(a.l, a.r, b.l, b.r);
  const double h = overlap_1d(a.t, a.b, b.t, b.b);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

// Affine map of [a0, a1] onto [b0, b1] that is exact at both endpoints.
double remap(double v, double a0, double a1, double b0, double b1) noexcept {
  if (v == a0) return b0;
  if (v == a1) return b1;
  return b0 + (v - a0) * ((b1 - b0) / (a1 - a0));
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Edge accessors along one axis: x edges (l, r) with y as the perpendicular
// extent, or y edges (t, b) with x as the perpendicular extent.
struct Axis {
  bool x;
  double& lo(Edges& e) const noexcept { return x ? e.l : e.t; }
  double& hi(Edges& e) const noexcept { return x ? e.r : e.b; }
  double lo(const Edges& e) const noexcept { return x ? e.l : e.t; }
  double hi(const Edges& e) const noexcept { return x ? e.r : e.b; }
  double perp_lo(const Edges& e) const noexcept { return x ? e.t : e.l; }
  double perp_hi(const Edges& e) const noexcept { return x ? e.b : e.r; }
};

void snap_to_group(std::vector<Edges>& members, const Edges& g, double theta) {
  for (auto& m : members) {
    if (std::abs(m.l - g.l) <= theta) m.l = g.l;
    if (std::abs(m.t - g.t) <= theta) m.t = g.t;
    if (std::abs(m.r - g.r) <= theta) m.r = g.r;
    if (std::abs(m.b - g.b) <= theta) m.b = g.b;
  }
}

// Moves every cluster of facing edges closer than theta onto one coordinate:
// the group edge when the cluster touches it, otherwise the midpoint of the
// cluster's extent.
void resolve_axis(std::vector<Edges>& members, const Edges& g, double theta, Axis axis) {
  const std::size_t n = members.size();
  UnionFind uf(2 * n);
  bool linked = false;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const Edges& ea = members[a];
      const Edges& eb = members[b];
      if (!(std::abs(axis.hi(ea) - axis.lo(eb)) < theta)) continue;
      const double shared = overlap_1d(axis.perp_lo(ea), axis.perp_hi(ea), axis.perp_lo(eb),
                                       axis.perp_hi(eb));
      const double extent = std::min(axis.perp_hi(ea) - axis.perp_lo(ea),
                                     axis.perp_hi(eb) - axis.perp_lo(eb));
      if (shared > std::min(theta, extent / 2.0)) {
        uf.unite(2 * a + 1, 2 * b);
        linked = true;
      }
    }
  }
  if (!linked) return;

  auto value = [&](std::size_t item) -> double& {
    return item % 2 == 0 ? axis.lo(members[item / 2]) : axis.hi(members[item / 2]);
  };
  std::vector<std::vector<std::size_t>> clusters(2 * n);
  for (std::size_t item = 0; item < 2 * n; ++item) clusters[uf.find(item)].push_back(item);

  for (const auto& cluster : clusters) {
    if (cluster.size() < 2) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool at_low_edge = false;
    bool at_high_edge = false;
    for (auto item : cluster) {
      const double v = value(item);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      at_low_edge |= v == axis.lo(g);
      at_high_edge |= v == axis.hi(g);
    }
    double target = lo + (hi - lo) / 2.0;
    if (lo == hi) target = lo;
    if (at_low_edge) target = axis.lo(g);
    if (at_high_edge) target = axis.hi(g);
    for (auto item : cluster) value(item) = target;
  }
}

struct AlignOutcome {
  std::vector<Edges> members;
  std::vector<std::string> unresolved;

  bool resolved() const noexcept { return unresolved.empty(); }
};

AlignOutcome align_edges(std::vector<Edges> members, const Edges& g, double theta) {
  snap_to_group(members, g, theta);
  resolve_axis(members, g, theta, Axis{true});
  resolve_axis(members, g, theta, Axis{false});

  AlignOutcome out;
  double covered = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    covered += members[i].area();
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      const double overlap = intersection(members[i], members[j]);
      if (overlap > 1e-12) {
        std::ostringstream msg;
        msg << "members " << i << " and " << j << " still overlap by area " << overlap;
        out.unresolved.push_back(msg.str());
      }
    }
  }
  if (std::abs(covered - g.area()) > 1e-10 && out.unresolved.empty()) {
    std::ostringstream msg;
    msg << "members leave a gap of area " << g.area() - covered << " in the group box";
    out.unresolved.push_back(msg.str());
  }
  out.members = std::move(members);
  return out;
}

bool aligned_rows(const BBox& a, const BBox& b, double theta) noexcept {
  return std::abs(a.y - b.y) <= theta && std::abs(a.h - b.h) <= theta;
}

bool aligned_columns(const BBox& a, const BBox& b, double theta) noexcept {
  return std::abs(a.x - b.x) <= theta && std::abs(a.w - b.w) <= theta;
}

// Total edge travel of an alignment; an exact tiling scores zero.
double movement(const std::vector<Edges>& before, const std::vector<Edges>& after) noexcept {
  double sum = 0.0;
  for (std::size_t k = 0; k < before.size(); ++k) {
    sum += std::abs(before[k].l - after[k].l) + std::abs(before[k].t - after[k].t) +
           std::abs(before[k].r - after[k].r) + std::abs(before[k].b - after[k].b);
  }
  return sum;
}

bool segment_crosses_interior(double x0, double y0, double x1, double y1, const BBox& box) {
  // Liang-Barsky against the open rectangle, shrunk by a hair so that a
  // segment running along an edge does not count as crossing.
  constexpr double kHair = 1e-12;
  double t_enter = 0.0;
  double t_exit = 1.0;
  const double p[2] = {x0, y0};
  const double d[2] = {x1 - x0, y1 - y0};
  const double lo[2] = {box.left() + kHair, box.top() + kHair};
  const double hi[2] = {box.right() - kHair, box.bottom() - kHair};
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (!(p[k] > lo[k] && p[k] < hi[k])) return false;
      continue;
    }
    double ta = (lo[k] - p[k]) / d[k];
    double tb = (hi[k] - p[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t_enter = std::max(t_enter, ta);
    t_exit = std::min(t_exit, tb);
  }
  return t_exit - t_enter > 1e-12;
}

struct WorkNode {
  Edges e;
  std::vector<std::size_t> kids;
  // Position of a leaf in the output design: level-1 node, and child for
  // small multiples members (npos for plain views).
  std::size_t node = npos;
  std::size_t child = npos;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

class Refiner {
 public:
  Refiner(const MVDesign& mv, const RefinementConfig& cfg) : mv_(mv), cfg_(cfg) {}

  RefineResult run() {
    RefineResult result;
    group_small_multiples(result);
    result.iterations = merge_loop();
    if (working_.size() == 1) {
      result.converged = true;
      stretch_to_display(result);
    } else {
      result.converged = false;
      result.non_guillotine = true;
      snap_residual(result);
    }
    result.design = write_back();
    return result;
  }

 private:
  std::size_t add(WorkNode node) {
    arena_.push_back(std::move(node));
    return arena_.size() - 1;
  }

  void transform(std::size_t id, const Edges& target) {
    const Edges old = arena_[id].e;
    if (old == target) return;
    arena_[id].e = target;
    const auto kids = arena_[id].kids;
    for (auto k : kids) {
      const Edges ke = arena_[k].e;
      transform(k, Edges{remap(ke.l, old.l, old.r, target.l, target.r),
                         remap(ke.t, old.t, old.b, target.t, target.b),
                         remap(ke.r, old.l, old.r, target.l, target.r),
                         remap(ke.b, old.t, old.b, target.t, target.b)});
    }
  }

  void group_small_multiples(RefineResult& result) {
    sm_group_.assign(mv_.nodes.size(), WorkNode::npos);
    for (std::size_t ni = 0; ni < mv_.nodes.size(); ++ni) {
      const auto& node = mv_.nodes[ni];
      if (const auto* v = std::get_if<View>(&node)) {
        working_.push_back(add(WorkNode{Edges::of(v->bbox), {}, ni, WorkNode::npos}));
        continue;
      }
      const auto& sm = std::get<SmallMultiples>(node);
      WorkNode group;
      std::vector<Edges> members;
      for (std::size_t ci = 0; ci < sm.children.size(); ++ci) {
        const Edges e = Edges::of(sm.children[ci].bbox);
        members.push_back(e);
        group.kids.push_back(add(WorkNode{e, {}, ni, ci}));
      }
      if (members.empty()) {
        working_.push_back(add(WorkNode{Edges::of(sm.bbox), {}, WorkNode::npos, WorkNode::npos}));
        sm_group_[ni] = working_.back();
        continue;
      }
      Edges g = members.front();
      for (const auto& m : members) g = enclose(g, m);
      group.e = g;
      const double theta = group_theta(g.box(), cfg_.theta_fraction);
      auto aligned = align_edges(members, g, theta);
      for (std::size_t k = 0; k < group.kids.size(); ++k) arena_[group.kids[k]].e = aligned.members[k];
      for (const auto& msg : aligned.unresolved) {
        result.warnings.push_back("small multiples " + std::to_string(sm.id) + ": " + msg);
      }
      const auto gid = add(std::move(group));
      working_.push_back(gid);
      sm_group_[ni] = gid;
    }
  }

  struct Candidate {
    double score = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    std::size_t j = 0;
    Edges g;
    std::vector<Edges> aligned;
  };

  int merge_loop() {
    int iterations = 0;
    while (working_.size() > 1 && iterations < cfg_.max_iterations) {
      std::vector<BBox> boxes;
      for (auto id : working_) boxes.push_back(arena_[id].e.box());

      std::optional<Candidate> best;
      for (const auto& [i, j] : neighbors(boxes)) {
        const Edges& a = arena_[working_[i]].e;
        const Edges& b = arena_[working_[j]].e;
        const Edges g = enclose(a, b);
        const double theta = group_theta(g.box(), cfg_.theta_fraction);
        if (!groupable(boxes[i], boxes[j], theta)) continue;
        if (intrudes(g, theta, i, j)) continue;
        auto trial = align_edges({a, b}, g, theta);
        if (!trial.resolved()) continue;
        const double score = movement({a, b}, trial.members);
        if (!best || score < best->score) {
          best = Candidate{score, i, j, g, std::move(trial.members)};
        }
      }
      if (!best) break;

      WorkNode merged;
      merged.e = best->g;
      merged.kids = {working_[best->i], working_[best->j]};
      transform(merged.kids[0], best->aligned[0]);
      transform(merged.kids[1], best->aligned[1]);
      working_[best->i] = add(std::move(merged));
      working_.erase(working_.begin() + static_cast<std::ptrdiff_t>(best->j));
      ++iterations;
    }
    return iterations;
  }

  // True when some other working box reaches deeper than theta into `g` on
  // both axes, i.e. the pair does not form a rectangle of its own.
  bool intrudes(const Edges& g, double theta, std::size_t i, std::size_t j) const {
    for (std::size_t k = 0; k < working_.size(); ++k) {
      if (k == i || k == j) continue;
      const Edges& o = arena_[working_[k]].e;
      if (overlap_1d(g.l, g.r, o.l, o.r) > theta && overlap_1d(g.t, g.b, o.t, o.b) > theta) {
        return true;
      }
    }
    return false;
  }

  void stretch_to_display(RefineResult& result) {
    const auto root = working_.front();
    const Edges unit{0.0, 0.0, 1.0, 1.0};
    const Edges& e = arena_[root].e;
    const double moved = std::max({std::abs(e.l), std::abs(e.t), std::abs(1.0 - e.r),
                                   std::abs(1.0 - e.b)});
    if (moved > cfg_.theta_fraction) {
      std::ostringstream msg;
      msg << "layout stretched by " << moved << " to fill the display";
      result.warnings.push_back(msg.str());
    }
    transform(root, unit);
  }

  void snap_residual(RefineResult& result) {
    const Edges unit{0.0, 0.0, 1.0, 1.0};
    std::vector<Edges> members;
    for (auto id : working_) members.push_back(arena_[id].e);
    auto aligned = align_edges(members, unit, cfg_.theta_fraction);
    for (std::size_t k = 0; k < working_.size(); ++k) transform(working_[k], aligned.members[k]);
    result.warnings.push_back("non-guillotine layout: " + std::to_string(working_.size()) +
                              " boxes could not be merged");
    for (const auto& msg : aligned.unresolved) result.warnings.push_back("residual: " + msg);
  }

  MVDesign write_back() const {
    // Boxes whose edges did not move keep their original center/size bits.
    auto update = [](BBox& box, const Edges& e) {
      if (!(Edges::of(box) == e)) box = e.box();
    };
    MVDesign out = mv_;
    for (const auto& w : arena_) {
      if (w.node == WorkNode::npos || !w.kids.empty()) continue;
      if (w.child == WorkNode::npos) {
        update(std::get<View>(out.nodes[w.node]).bbox, w.e);
      } else {
        update(std::get<SmallMultiples>(out.nodes[w.node]).children[w.child].bbox, w.e);
      }
    }
    for (std::size_t ni = 0; ni < out.nodes.size(); ++ni) {
      if (sm_group_[ni] != WorkNode::npos) {
        update(std::get<SmallMultiples>(out.nodes[ni]).bbox, arena_[sm_group_[ni]].e);
      }
    }
    return out;
  }

  const MVDesign& mv_;
  const RefinementConfig& cfg_;
  std::vector<WorkNode> arena_;
  std::vector<std::size_t> working_;
  std::vector<std::size_t> sm_group_;
};

}  // namespace

void RefinementConfig::check() const {
  if (!(theta_fraction > 0.0 && theta_fraction < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "theta_fraction must lie in (0, 0.5)");
  }
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
}

double group_theta(const BBox& group, double fraction) noexcept {
  return fraction * (group.w + group.h) / 2.0;
}

BBox enclosing_box(std::span<const BBox> boxes) {
  if (boxes.empty()) throw Error(ErrorCode::Empty, "enclosing_box of no boxes");
  if (boxes.size() == 1) return boxes.front();
  Edges g = Edges::of(boxes.front());
  for (const auto& b : boxes) g = enclose(g, Edges::of(b));
  return g.box();
}

std::set<std::pair<std::size_t, std::size_t>> neighbors(std::span<const BBox> boxes) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      bool blocked = false;
      for (std::size_t k = 0; k < boxes.size() && !blocked; ++k) {
        if (k == i || k == j) continue;
        blocked = segment_crosses_interior(boxes[i].x, boxes[i].y, boxes[j].x, boxes[j].y, boxes[k]);
      }
      if (!blocked) out.emplace(i, j);
    }
  }
  return out;
}

bool groupable(const BBox& a, const BBox& b, double theta) noexcept {
  return aligned_rows(a, b, theta) || aligned_columns(a, b, theta);
}

GroupBox GroupBox::enclosing(std::vector<BBox> members) {
  GroupBox g;
  g.bbox_g = enclosing_box(members);
  g.members = std::move(members);
  return g;
}

AlignResult align_group(const GroupBox& group, double theta) {
  std::vector<Edges> members;
  members.reserve(group.members.size());
  for (const auto& m : group.members) members.push_back(Edges::of(m));
  auto aligned = align_edges(std::move(members), Edges::of(group.bbox_g), theta);
  AlignResult out;
  for (std::size_t k = 0; k < aligned.members.size(); ++k) {
    const auto& original = group.members[k];
    out.boxes.push_back(aligned.members[k] == Edges::of(original) ? original
                                                                   : aligned.members[k].box());
  }
  out.unresolved = std::move(aligned.unresolved);
  return out;
}

RefineResult refine(const MVDesign& mv, const RefinementConfig& cfg) {
  cfg.check();
  return Refiner(mv, cfg).run();
}

}  // namespace mvlab
