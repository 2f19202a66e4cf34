// synth.hpp - random layouts and corpora for property tests.

#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mvlab/model.hpp"

namespace synth {

struct Rect {
  double l, t, r, b;
  mvlab::BBox box() const { return mvlab::BBox::from_edges(l, t, r, b); }
};

/// Slice-and-dice structure without coordinates.
struct Shape {
  bool vertical = true;  // children left to right when true
  std::vector<Shape> children;
  bool leaf() const { return children.empty(); }
  std::size_t leaves() const {
    if (leaf()) return 1;
    std::size_t n = 0;
    for (const auto& c : children) n += c.leaves();
    return n;
  }
};

/// A random guillotine structure with `n` leaves. Directions alternate below
/// each split so every split is a genuine cut.
inline Shape random_shape(std::size_t n, std::mt19937_64& rng, bool vertical) {
  Shape s;
  s.vertical = vertical;
  if (n <= 1) return s;
  std::uniform_int_distribution<std::size_t> parts_dist(2, std::min<std::size_t>(n, 3));
  const std::size_t parts = parts_dist(rng);
  std::vector<std::size_t> sizes(parts, 1);
  for (std::size_t extra = n - parts; extra > 0; --extra) {
    sizes[std::uniform_int_distribution<std::size_t>(0, parts - 1)(rng)] += 1;
  }
  for (auto k : sizes) s.children.push_back(random_shape(k, rng, !vertical));
  return s;
}

inline Shape random_shape(std::size_t n, std::mt19937_64& rng) {
  return random_shape(n, rng, std::bernoulli_distribution(0.5)(rng));
}

/// Cut ratios stay in [0.3, 0.7] of the equal share, so leaves do not get
/// thin and unrelated cuts rarely line up.
inline void realize(const Shape& s, const Rect& area, std::mt19937_64& rng, std::vector<Rect>& out) {
  if (s.leaf()) {
    out.push_back(area);
    return;
  }
  std::uniform_real_distribution<double> jitter(0.75, 1.25);
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& c : s.children) {
    weights.push_back(static_cast<double>(c.leaves()) * jitter(rng));
    total += weights.back();
  }
  const double lo = s.vertical ? area.l : area.t;
  const double hi = s.vertical ? area.r : area.b;
  double pos = lo;
  for (std::size_t i = 0; i < s.children.size(); ++i) {
    const double next = i + 1 == s.children.size() ? hi : pos + (hi - lo) * weights[i] / total;
    Rect sub = area;
    if (s.vertical) {
      sub.l = pos;
      sub.r = next;
    } else {
      sub.t = pos;
      sub.b = next;
    }
    realize(s.children[i], sub, rng, out);
    pos = next;
  }
}

inline std::vector<Rect> realize(const Shape& s, std::mt19937_64& rng) {
  std::vector<Rect> out;
  realize(s, {0.0, 0.0, 1.0, 1.0}, rng, out);
  return out;
}

inline mvlab::ViewType random_type(std::mt19937_64& rng) {
  return mvlab::view_type_at(std::uniform_int_distribution<std::size_t>(0, mvlab::kViewTypeCount - 1)(rng));
}

inline mvlab::MVDesign design_from(const std::vector<mvlab::BBox>& boxes,
                                   const std::vector<mvlab::ViewType>& types, std::string doi = {}) {
  mvlab::MVDesign mv;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    mv.nodes.emplace_back(mvlab::View{types[i], boxes[i], std::to_string(i + 1)});
  }
  if (!doi.empty()) mv.metadata = mvlab::Metadata{doi, {}, std::nullopt, {}, {}};
  return mv;
}

inline mvlab::MVDesign design_from(const std::vector<Rect>& rects, const std::vector<mvlab::ViewType>& types,
                                   std::string doi = {}) {
  std::vector<mvlab::BBox> boxes;
  for (const auto& r : rects) boxes.push_back(r.box());
  return design_from(boxes, types, std::move(doi));
}

inline std::vector<mvlab::ViewType> random_types(std::size_t n, std::mt19937_64& rng) {
  std::vector<mvlab::ViewType> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_type(rng));
  return out;
}

inline double min_extent(const std::vector<Rect>& rects) {
  double m = 1.0;
  for (const auto& r : rects) m = std::min({m, r.r - r.l, r.b - r.t});
  return m;
}

/// Moves every edge independently by up to `amount`, then clips to the display.
inline std::vector<Rect> perturb(std::vector<Rect> rects, double amount, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-amount, amount);
  for (auto& r : rects) {
    r.l = std::clamp(r.l + d(rng), 0.0, 1.0);
    r.r = std::clamp(r.r + d(rng), 0.0, 1.0);
    r.t = std::clamp(r.t + d(rng), 0.0, 1.0);
    r.b = std::clamp(r.b + d(rng), 0.0, 1.0);
  }
  return rects;
}

/// Monotone piecewise-linear map of [0,1] onto itself through random knots.
struct Warp {
  std::vector<double> from{0.0, 1.0};
  std::vector<double> to{0.0, 1.0};

  static Warp random(std::mt19937_64& rng) {
    Warp w;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a{u(rng), u(rng), u(rng)};
    std::vector<double> b{u(rng), u(rng), u(rng)};
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    w.from = {0.0, a[0], a[1], a[2], 1.0};
    w.to = {0.0, b[0], b[1], b[2], 1.0};
    return w;
  }

  double operator()(double x) const {
    for (std::size_t i = 0; i + 1 < from.size(); ++i) {
      if (x <= from[i + 1] || i + 2 == from.size()) {
        const double span = from[i + 1] - from[i];
        const double f = span > 0.0 ? (x - from[i]) / span : 0.0;
        return to[i] + f * (to[i + 1] - to[i]);
      }
    }
    return x;
  }
};

inline std::vector<Rect> warp(const std::vector<Rect>& rects, const Warp& wx, const Warp& wy) {
  std::vector<Rect> out;
  for (const auto& r : rects) out.push_back({wx(r.l), wy(r.t), wx(r.r), wy(r.b)});
  return out;
}

inline std::vector<Rect> mirror_x(const std::vector<Rect>& rects) {
  std::vector<Rect> out;
  for (const auto& r : rects) out.push_back({1.0 - r.r, r.t, 1.0 - r.l, r.b});
  return out;
}

inline std::vector<Rect> mirror_y(const std::vector<Rect>& rects) {
  std::vector<Rect> out;
  for (const auto& r : rects) out.push_back({r.l, 1.0 - r.b, r.r, 1.0 - r.t});
  return out;
}

/// Random guillotine MV with `n` views of random types.
inline mvlab::MVDesign random_mv(std::size_t n, std::mt19937_64& rng, std::string doi = {}) {
  return design_from(realize(random_shape(n, rng), rng), random_types(n, rng), std::move(doi));
}

}  // namespace synth
