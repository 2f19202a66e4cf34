#include "mvlab/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "json_util.hpp"
#include "mvlab/error.hpp"

namespace mvlab {

namespace {

using detail::json;

constexpr double kBoundaryEps = 1e-9;

void require_refined(const MVDesign& mv) {
  for (std::size_t i = 0; i < mv.nodes.size(); ++i) {
    const auto& a = node_bbox(mv.nodes[i]);
    if (!inside_unit_square(a, kCutEps)) {
      throw Error(ErrorCode::NotRefined, "node " + node_id(mv.nodes[i]) + " leaves the display");
    }
    for (std::size_t j = i + 1; j < mv.nodes.size(); ++j) {
      if (intersection_area(a, node_bbox(mv.nodes[j])) >= kCutEps) {
        throw Error(ErrorCode::NotRefined,
                    "nodes " + node_id(mv.nodes[i]) + " and " + node_id(mv.nodes[j]) + " overlap");
      }
    }
  }
}

void add_view(CompositionTensor& t, const View& v) {
  const auto grid = position_grid(v);
  for (std::size_t cell = 0; cell < grid.size(); ++cell) {
    t.values[cell * kViewTypeCount + index_of(v.type)] += grid[cell];
  }
}

double number(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw Error(ErrorCode::Malformed, std::string("sketch field '") + key + "' must be a number");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::BadGeometry, std::string("non-finite '") + key + "'");
  return v;
}

}  // namespace

double CompositionTensor::total() const noexcept {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

void MIConfig::check() const {
  if (bins < 2) throw Error(ErrorCode::InvalidArgument, "bins must be at least 2");
}

UserSketch parse_sketch(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Malformed, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::Malformed, "sketch must be an object");
  UserSketch s;
  if (const auto it = doc.find("canvas"); it != doc.end()) {
    if (!it->is_object()) throw Error(ErrorCode::Malformed, "canvas must be an object");
    s.canvas_w = number(*it, "w");
    s.canvas_h = number(*it, "h");
    if (s.canvas_w <= 0.0 || s.canvas_h <= 0.0) {
      throw Error(ErrorCode::BadGeometry, "canvas size must be positive");
    }
  }
  const auto views = doc.find("views");
  if (views == doc.end() || !views->is_array()) {
    throw Error(ErrorCode::Malformed, "sketch needs a 'views' array");
  }
  for (const auto& v : *views) {
    if (!v.is_object()) throw Error(ErrorCode::Malformed, "sketch view must be an object");
    const auto type = v.find("type");
    if (type == v.end() || !type->is_string()) {
      throw Error(ErrorCode::Malformed, "sketch view needs a 'type' string");
    }
    const auto parsed = parse_view_type(type->get<std::string>());
    if (!parsed) throw Error(ErrorCode::BadType, "unknown view type '" + type->get<std::string>() + "'");
    SketchView sv{*parsed, {number(v, "x"), number(v, "y"), number(v, "w"), number(v, "h")}};
    if (sv.rect.w <= 0.0 || sv.rect.h <= 0.0) {
      throw Error(ErrorCode::BadGeometry, "sketch view size must be positive");
    }
    s.views.push_back(sv);
  }
  return s;
}

CompositionTensor composition_tensor(const MVDesign& mv) {
  require_refined(mv);
  CompositionTensor t;
  for (const auto& v : leaf_views(mv)) add_view(t, v);
  return t;
}

std::vector<View> normalized_sketch_views(const UserSketch& s) {
  if (s.views.empty()) throw Error(ErrorCode::EmptySketch, "sketch has no views");
  double l = s.views.front().rect.left();
  double r = s.views.front().rect.right();
  double t = s.views.front().rect.top();
  double b = s.views.front().rect.bottom();
  for (const auto& v : s.views) {
    l = std::min(l, v.rect.left());
    r = std::max(r, v.rect.right());
    t = std::min(t, v.rect.top());
    b = std::max(b, v.rect.bottom());
  }
  const double w = r - l;
  const double h = b - t;
  if (!(w > 0.0) || !(h > 0.0)) throw Error(ErrorCode::BadGeometry, "sketch views have no extent");
  std::vector<View> out;
  out.reserve(s.views.size());
  for (std::size_t i = 0; i < s.views.size(); ++i) {
    const auto& rect = s.views[i].rect;
    const auto box = BBox::from_edges((rect.left() - l) / w, (rect.top() - t) / h,
                                      (rect.right() - l) / w, (rect.bottom() - t) / h);
    out.push_back({s.views[i].type, box, std::to_string(i + 1)});
  }
  return out;
}

CompositionTensor sketch_tensor(const UserSketch& s) {
  CompositionTensor t;
  for (const auto& v : normalized_sketch_views(s)) add_view(t, v);
  return t;
}

double shared_upper(std::span<const double> a, std::span<const double> b) noexcept {
  double upper = 0.0;
  for (double v : a) upper = std::max(upper, v);
  for (double v : b) upper = std::max(upper, v);
  return upper;
}

std::vector<int> discretize(std::span<const double> values, double upper, const MIConfig& cfg) {
  cfg.check();
  std::vector<int> labels(values.size(), 0);
  if (!(upper > 0.0)) return labels;
  const double width = upper / cfg.bins;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double pos = values[i] / width + kBoundaryEps;
    labels[i] = std::clamp(static_cast<int>(std::floor(pos)), 0, cfg.bins - 1);
  }
  return labels;
}

double mutual_information_from_labels(std::span<const int> x, std::span<const int> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "label sequences differ in length");
  if (x.empty()) return 0.0;
  std::map<std::pair<int, int>, std::size_t> joint;
  std::map<int, std::size_t> px;
  std::map<int, std::size_t> py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++joint[{x[i], y[i]}];
    ++px[x[i]];
    ++py[y[i]];
  }
  const double n = static_cast<double>(x.size());
  std::vector<double> terms;
  terms.reserve(joint.size());
  for (const auto& [key, count] : joint) {
    const double pij = static_cast<double>(count) / n;
    const double pi = static_cast<double>(px[key.first]) / n;
    const double pj = static_cast<double>(py[key.second]) / n;
    terms.push_back(pij * std::log(pij / (pi * pj)));
  }
  // Swapping x and y transposes the joint table; summing in sorted order keeps
  // the result bit-identical.
  std::sort(terms.begin(), terms.end());
  const double mi = std::accumulate(terms.begin(), terms.end(), 0.0);
  return std::max(mi, 0.0);
}

double mutual_information(const CompositionTensor& a, const CompositionTensor& b,
                          const MIConfig& cfg) {
  const double upper = shared_upper(a.values, b.values);
  const auto x = discretize(a.values, upper, cfg);
  const auto y = discretize(b.values, upper, cfg);
  return mutual_information_from_labels(x, y);
}

std::vector<Recommendation> recommend(std::span<const CorpusEntry> corpus, const UserSketch& s,
                                      const std::set<std::size_t>& view_counts, std::size_t top_k,
                                      const MIConfig& cfg) {
  cfg.check();
  const auto query = sketch_tensor(s);
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no MVs");

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (view_counts.empty() || view_counts.contains(corpus[i].view_count)) candidates.push_back(i);
  }

  std::vector<double> scores(candidates.size());
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  auto score_range = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t k = begin; k < candidates.size(); k += stride) {
      scores[k] = mutual_information(query, corpus[candidates[k]].tensor, cfg);
    }
  };
  if (workers == 1 || candidates.size() < 64) {
    score_range(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(score_range, w, workers);
  }

  std::vector<Recommendation> out;
  out.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& e = corpus[candidates[k]];
    out.push_back({e.doi, scores[k], e.layout, e.view_count, 0});
  }
  std::sort(out.begin(), out.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doi < b.doi;
  });
  if (top_k > 0 && out.size() > top_k) out.resize(top_k);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

std::vector<std::pair<ViewType, double>> correlated_types(ViewType t, const CoOccurrenceMatrix& m,
                                                          std::size_t top_k) {
  if (m.column_missing(t)) {
    throw Error(ErrorCode::MissingType, std::string(canonical_name(t)) + " does not occur in the corpus");
  }
  std::vector<std::pair<ViewType, double>> out;
  for (auto other : all_view_types()) {
    if (other == t) continue;
    const auto p = m.at(other, t);
    if (p && *p > 0.0) out.emplace_back(other, *p);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (top_k > 0 && out.size() > top_k) out.resize(top_k);
  return out;
}

std::optional<AlignMode> parse_align_mode(std::string_view name) noexcept {
  if (name == "left") return AlignMode::Left;
  if (name == "right") return AlignMode::Right;
  if (name == "top") return AlignMode::Top;
  if (name == "bottom") return AlignMode::Bottom;
  if (name == "center-h") return AlignMode::CenterH;
  if (name == "center-v") return AlignMode::CenterV;
  return std::nullopt;
}

std::vector<BBox> align_views(std::span<const BBox> selection, AlignMode mode) {
  if (selection.size() < 2) throw Error(ErrorCode::TooFew, "alignment needs at least two views");
  std::vector<BBox> out(selection.begin(), selection.end());
  const double n = static_cast<double>(out.size());
  switch (mode) {
    case AlignMode::Left: {
      double edge = out.front().left();
      for (const auto& b : out) edge = std::min(edge, b.left());
      for (auto& b : out) if (b.left() != edge) b.x = edge + b.w / 2.0;
      break;
    }
    case AlignMode::Right: {
      double edge = out.front().right();
      for (const auto& b : out) edge = std::max(edge, b.right());
      for (auto& b : out) if (b.right() != edge) b.x = edge - b.w / 2.0;
      break;
    }
    case AlignMode::Top: {
      double edge = out.front().top();
      for (const auto& b : out) edge = std::min(edge, b.top());
      for (auto& b : out) if (b.top() != edge) b.y = edge + b.h / 2.0;
      break;
    }
    case AlignMode::Bottom: {
      double edge = out.front().bottom();
      for (const auto& b : out) edge = std::max(edge, b.bottom());
      for (auto& b : out) if (b.bottom() != edge) b.y = edge - b.h / 2.0;
      break;
    }
    case AlignMode::CenterH: {
      double sum = 0.0;
      for (const auto& b : out) sum += b.x;
      for (auto& b : out) b.x = sum / n;
      break;
    }
    case AlignMode::CenterV: {
      double sum = 0.0;
      for (const auto& b : out) sum += b.y;
      for (auto& b : out) b.y = sum / n;
      break;
    }
  }
  return out;
}

AppliedLayout apply_layout(const MVDesign& templ, const UserSketch& s) {
  const auto slots = leaf_views(templ);
  if (slots.size() < s.views.size()) {
    throw Error(ErrorCode::TemplateTooSmall, "template has " + std::to_string(slots.size()) +
                                                 " views, sketch has " + std::to_string(s.views.size()));
  }
  AppliedLayout result{templ, {}};
  if (s.views.empty()) return result;

  const auto sketch = normalized_sketch_views(s);
  std::vector<PositionGrid> sketch_grids;
  for (const auto& v : sketch) sketch_grids.push_back(position_grid(v));

  std::vector<std::size_t> order(slots.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return slots[a].bbox.area() > slots[b].bbox.area();
  });

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> view_of_slot(slots.size(), kNone);
  result.slot_of_view.assign(sketch.size(), kNone);

  auto closest = [&](std::size_t slot, bool same_type) {
    const auto grid = position_grid(slots[slot]);
    std::size_t best = kNone;
    double best_d = 0.0;
    for (std::size_t v = 0; v < sketch.size(); ++v) {
      if (result.slot_of_view[v] != kNone) continue;
      if (same_type && sketch[v].type != slots[slot].type) continue;
      const double d = relative_position_change(grid, sketch_grids[v]);
      if (best == kNone || d < best_d) {
        best = v;
        best_d = d;
      }
    }
    return best;
  };
  for (bool same_type : {true, false}) {
    for (std::size_t slot : order) {
      if (view_of_slot[slot] != kNone) continue;
      const std::size_t v = closest(slot, same_type);
      if (v == kNone) continue;
      view_of_slot[slot] = v;
      result.slot_of_view[v] = slot;
    }
  }

  // Leaf order of leaf_views(): level-1 views first, then small multiples children.
  std::size_t leaf = 0;
  auto retype = [&](View& v) {
    if (view_of_slot[leaf] != kNone) v.type = sketch[view_of_slot[leaf]].type;
    ++leaf;
  };
  for (auto& node : result.design.nodes) {
    if (auto* v = std::get_if<View>(&node)) retype(*v);
  }
  for (auto& node : result.design.nodes) {
    if (auto* sm = std::get_if<SmallMultiples>(&node)) {
      for (auto& child : sm->children) retype(child);
    }
  }
  return result;
}

}  // namespace mvlab
