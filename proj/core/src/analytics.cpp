#include "mvlab/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvlab/error.hpp"

namespace mvlab {

namespace {

void require_items(const Corpus& c) {
  if (c.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no MVs");
}

std::array<std::size_t, kViewTypeCount> type_counts(const MVDesign& mv) {
  std::array<std::size_t, kViewTypeCount> counts{};
  for (const auto& node : mv.nodes) {
    if (const auto* v = std::get_if<View>(&node)) {
      ++counts[index_of(v->type)];
    } else {
      for (const auto& child : std::get<SmallMultiples>(node).children) ++counts[index_of(child.type)];
    }
  }
  return counts;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::optional<double> mean_pairwise_change(const std::vector<PositionGrid>& grids) {
  const std::size_t m = grids.size();
  if (m < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) sum += relative_position_change(grids[i], grids[j]);
  }
  // D is symmetric, so the ordered-pair sum is twice the unordered one.
  return 2.0 * sum / (static_cast<double>(m) * static_cast<double>(m - 1));
}

}  // namespace

std::map<int, std::size_t> view_count_distribution(const Corpus& c, CountMode mode) {
  require_items(c);
  std::map<int, std::size_t> histogram;
  for (const auto& mv : c.items) {
    const auto n = mode == CountMode::LeafViews ? leaf_count(mv) : mv.nodes.size();
    ++histogram[std::min(static_cast<int>(n), kCountBucketMax)];
  }
  return histogram;
}

std::array<double, kViewTypeCount> type_frequency(const Corpus& c) {
  require_items(c);
  std::array<double, kViewTypeCount> freq{};
  for (const auto& mv : c.items) {
    const auto counts = type_counts(mv);
    for (std::size_t k = 0; k < kViewTypeCount; ++k) {
      if (counts[k] > 0) freq[k] += 1.0;
    }
  }
  for (auto& f : freq) f /= static_cast<double>(c.n());
  return freq;
}

CoOccurrenceMatrix conditional_probability(const Corpus& c) {
  require_items(c);
  std::array<std::size_t, kViewTypeCount> with{};
  std::array<std::size_t, kViewTypeCount> repeated{};
  std::array<std::array<std::size_t, kViewTypeCount>, kViewTypeCount> joint{};
  for (const auto& mv : c.items) {
    const auto counts = type_counts(mv);
    for (std::size_t j = 0; j < kViewTypeCount; ++j) {
      if (counts[j] == 0) continue;
      ++with[j];
      if (counts[j] >= 2) ++repeated[j];
      for (std::size_t i = 0; i < kViewTypeCount; ++i) {
        if (i != j && counts[i] > 0) ++joint[i][j];
      }
    }
  }
  CoOccurrenceMatrix m;
  for (std::size_t j = 0; j < kViewTypeCount; ++j) {
    if (with[j] == 0) continue;
    const double denom = static_cast<double>(with[j]);
    for (std::size_t i = 0; i < kViewTypeCount; ++i) {
      const double num = static_cast<double>(i == j ? repeated[j] : joint[i][j]);
      m.set(view_type_at(i), view_type_at(j), num / denom);
    }
  }
  return m;
}

double aspect_ratio(const View& v) {
  if (v.bbox.h == 0.0) throw Error(ErrorCode::Degenerate, "view " + v.id + " has zero height");
  return v.bbox.w / v.bbox.h;
}

PositionGrid position_grid(const BBox& box) noexcept {
  PositionGrid grid{};
  const double l = box.left();
  const double r = box.right();
  const double t = box.top();
  const double b = box.bottom();
  for (int row = 0; row < 3; ++row) {
    const double h = std::min(b, (row + 1) / 3.0) - std::max(t, row / 3.0);
    if (h <= 0.0) continue;
    for (int col = 0; col < 3; ++col) {
      const double w = std::min(r, (col + 1) / 3.0) - std::max(l, col / 3.0);
      if (w > 0.0) grid[static_cast<std::size_t>(row * 3 + col)] = w * h;
    }
  }
  return grid;
}

double relative_position_change(const PositionGrid& a, const PositionGrid& b) noexcept {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += std::abs(a[k] - b[k]);
  return sum / 2.0;
}

std::optional<PositionGrid> type_grid(const MVDesign& mv, ViewType t) {
  std::optional<PositionGrid> out;
  for (const auto& v : leaf_views(mv)) {
    if (v.type != t) continue;
    if (!out) out = PositionGrid{};
    const auto g = position_grid(v);
    for (std::size_t k = 0; k < g.size(); ++k) (*out)[k] += g[k];
  }
  return out;
}

std::optional<double> stability(const Corpus& c, ViewType t) {
  std::vector<PositionGrid> grids;
  for (const auto& mv : c.items) {
    if (auto g = type_grid(mv, t)) grids.push_back(*g);
  }
  return mean_pairwise_change(grids);
}

std::optional<double> stability(const Corpus& c, ViewType t, const LayoutCode& layout,
                                std::span<const LayoutCode> codes) {
  if (codes.size() != c.items.size()) {
    throw Error(ErrorCode::InvalidArgument, "one layout code per MV is required");
  }
  std::vector<PositionGrid> grids;
  for (std::size_t i = 0; i < c.items.size(); ++i) {
    if (codes[i] != layout) continue;
    if (auto g = type_grid(c.items[i], t)) grids.push_back(*g);
  }
  return mean_pairwise_change(grids);
}

std::map<ViewType, PositionGrid> mean_position_by_type(const Corpus& c) {
  require_items(c);
  std::map<ViewType, PositionGrid> sums;
  std::map<ViewType, std::size_t> counts;
  for (const auto& mv : c.items) {
    for (auto t : all_view_types()) {
      auto g = type_grid(mv, t);
      if (!g) continue;
      auto& acc = sums[t];
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += (*g)[k];
      ++counts[t];
    }
  }
  for (auto& [t, grid] : sums) {
    for (auto& v : grid) v /= static_cast<double>(counts[t]);
  }
  return sums;
}

std::map<ViewType, AspectStats> aspect_stats(const Corpus& c) {
  require_items(c);
  std::map<ViewType, AspectStats> out;
  for (const auto& mv : c.items) {
    for (const auto& v : leaf_views(mv)) out[v.type].samples.push_back(aspect_ratio(v));
  }
  for (auto& [t, s] : out) {
    std::sort(s.samples.begin(), s.samples.end());
    s.min = s.samples.front();
    s.max = s.samples.back();
    s.q1 = quantile(s.samples, 0.25);
    s.median = quantile(s.samples, 0.5);
    s.q3 = quantile(s.samples, 0.75);
    s.mean = std::accumulate(s.samples.begin(), s.samples.end(), 0.0) /
             static_cast<double>(s.samples.size());
  }
  return out;
}

std::map<ViewType, TypeStats> type_stats(const Corpus& c) {
  const auto freq = type_frequency(c);
  auto aspects = aspect_stats(c);
  auto positions = mean_position_by_type(c);
  std::map<ViewType, TypeStats> out;
  for (auto t : all_view_types()) {
    TypeStats s;
    s.frequency = freq[index_of(t)];
    if (auto it = aspects.find(t); it != aspects.end()) s.aspect = std::move(it->second);
    if (auto it = positions.find(t); it != positions.end()) s.mean_position = it->second;
    out.emplace(t, std::move(s));
  }
  return out;
}

}  // namespace mvlab
