// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
// The reference-corpus check runs only when MVLAB_REFERENCE_CORPUS names an
// annotation directory; otherwise it prints SKIP.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "mvlab/analytics.hpp"
#include "mvlab/annotation.hpp"
#include "mvlab/encoding.hpp"
#include "mvlab/error.hpp"
#include "mvlab/ingest.hpp"
#include "mvlab/recommender.hpp"
#include "mvlab/refine.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace mvlab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  bool skipped = false;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

struct Tally {
  int failed = 0;

  void run(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.skipped) {
      std::printf("SKIP  %-34s %s\n", name.c_str(), o.detail.c_str());
      return;
    }
    if (o.pass && secs >= limit_s) {
      o.pass = false;
      o.detail = "over the time limit";
    }
    if (!o.pass) ++failed;
    std::printf("%s  %-34s %7.3fs (limit %.0fs)%s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, limit_s,
                o.detail.empty() ? "" : "  ", o.detail.c_str());
    std::fflush(stdout);
  }
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MVDesign columns(ViewType a, double split, ViewType b) {
  return synth::design_from(std::vector<BBox>{BBox::from_edges(0, 0, split, 1), BBox::from_edges(split, 0, 1, 1)},
                            {a, b});
}

double max_leaf_shift(const MVDesign& a, const MVDesign& b) {
  const auto la = leaf_views(a);
  const auto lb = leaf_views(b);
  double m = 0.0;
  for (std::size_t i = 0; i < la.size(); ++i) {
    m = std::max({m, std::abs(la[i].bbox.left() - lb[i].bbox.left()),
                  std::abs(la[i].bbox.right() - lb[i].bbox.right()),
                  std::abs(la[i].bbox.top() - lb[i].bbox.top()),
                  std::abs(la[i].bbox.bottom() - lb[i].bbox.bottom())});
  }
  return m;
}

std::string signature(const std::vector<synth::Rect>& rects) {
  return canonical_signature(slicing_tree(synth::design_from(rects, std::vector<ViewType>(rects.size(), ViewType::Bar))));
}

double oracle_mi(const CompositionTensor& a, const CompositionTensor& b) {
  double upper = 0.0;
  for (std::size_t k = 0; k < kTensorSize; ++k) upper = std::max({upper, a.values[k], b.values[k]});
  const std::vector<double> va(a.values.begin(), a.values.end());
  const std::vector<double> vb(b.values.begin(), b.values.end());
  return oracle::mutual_information(oracle::labels(va, upper, 8), oracle::labels(vb, upper, 8), 8);
}

UserSketch sketch_of(const MVDesign& mv, double scale, double dx, double dy) {
  UserSketch s;
  for (const auto& v : leaf_views(mv)) {
    s.views.push_back({v.type, BBox{v.bbox.x * scale + dx, v.bbox.y * scale + dy, v.bbox.w * scale, v.bbox.h * scale}});
  }
  return s;
}

Outcome position_grid_example() {
  Outcome o;
  const auto g = position_grid(BBox{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  for (std::size_t k : {0u, 1u, 3u, 4u}) {
    o.expect(std::abs(g[k] - 1.0 / 36.0) <= 1e-12, "cell " + std::to_string(k + 1) + " = " + num(g[k]));
  }
  for (std::size_t k : {2u, 5u, 6u, 7u, 8u}) o.expect(g[k] == 0.0, "cell " + std::to_string(k + 1) + " not empty");
  return o;
}

Outcome conditional_probability_oracle() {
  Outcome o;
  std::mt19937_64 rng(1001);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 20)(rng);
    std::vector<std::size_t> palette(kViewTypeCount);
    std::iota(palette.begin(), palette.end(), 0);
    std::shuffle(palette.begin(), palette.end(), rng);
    Corpus c;
    std::vector<std::multiset<std::size_t>> sets;
    for (int i = 0; i < n; ++i) {
      const int k = std::uniform_int_distribution<int>(2, 6)(rng);
      std::vector<ViewType> types;
      std::multiset<std::size_t> s;
      for (int j = 0; j < k; ++j) {
        const auto t = palette[std::uniform_int_distribution<std::size_t>(0, 5)(rng)];
        types.push_back(view_type_at(t));
        s.insert(t);
      }
      std::vector<BBox> boxes;
      for (int j = 0; j < k; ++j) boxes.push_back(BBox::from_edges(0, double(j) / k, 1, double(j + 1) / k));
      c.items.push_back(synth::design_from(boxes, types));
      sets.push_back(s);
    }
    const auto m = conditional_probability(c);
    const auto expect = oracle::conditional(sets);
    for (std::size_t i = 0; i < kViewTypeCount; ++i) {
      for (std::size_t j = 0; j < kViewTypeCount; ++j) {
        const auto got = m.at(view_type_at(i), view_type_at(j));
        const auto it = expect.find({i, j});
        const bool ok = it == expect.end() ? !got.has_value() : (got.has_value() && *got == it->second);
        o.expect(ok, "corpus " + std::to_string(trial) + " entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  return o;
}

Outcome position_change_properties() {
  Outcome o;
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_grid = [&] {
    double l = u(rng), r = u(rng), t = u(rng), b = u(rng);
    if (l > r) std::swap(l, r);
    if (t > b) std::swap(t, b);
    return position_grid(BBox::from_edges(l, t, r, b));
  };
  for (int i = 0; i < 20000; ++i) {
    const auto a = random_grid();
    const auto b = random_grid();
    const double ab = relative_position_change(a, b);
    o.expect(ab == relative_position_change(b, a), "D not symmetric");
    o.expect(relative_position_change(a, a) == 0.0, "D(g, g) != 0");
    o.expect(ab >= 0.0 && ab <= 0.5, "D outside [0, 0.5]: " + num(ab));
  }
  const auto left = position_grid(BBox::from_edges(0, 0, 1.0 / 3.0, 1));
  const auto right = position_grid(BBox::from_edges(2.0 / 3.0, 0, 1, 1));
  const double lr = relative_position_change(left, right);
  o.expect(std::abs(lr - 1.0 / 3.0) <= 1e-12, "left vs right column D = " + num(lr));

  Corpus two{{columns(ViewType::Map, 1.0 / 3.0, ViewType::Bar), columns(ViewType::Bar, 2.0 / 3.0, ViewType::Map)}};
  const auto stb = stability(two, ViewType::Map);
  o.expect(stb.has_value() && std::abs(*stb - 1.0 / 3.0) <= 1e-12,
           "two-MV stability = " + (stb ? num(*stb) : std::string("null")));
  return o;
}

Outcome refinement_fuzz() {
  Outcome o;
  std::mt19937_64 rng(1003);
  int worst_trial = -1;
  double worst_area = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 11);
    const auto exact = synth::realize(synth::random_shape(n, rng), rng);
    // Edges move by at most a quarter of the smallest possible theta, so every
    // gap, overlap and size mismatch between neighbours stays below theta.
    const double amount = 0.24 * 0.03 * synth::min_extent(exact);
    const auto mv = synth::design_from(synth::perturb(exact, amount, rng), synth::random_types(n, rng));
    const auto r = refine(mv);
    const double area_err = std::abs(level1_area(r.design) - 1.0);
    if (area_err > worst_area) {
      worst_area = area_err;
      worst_trial = trial;
    }
    const auto t = std::to_string(trial);
    o.expect(r.converged, "trial " + t + " did not converge");
    o.expect(area_err <= 1e-6, "trial " + t + " area sum off by " + num(area_err));
    o.expect(max_level1_overlap(r.design) < kGeomEps, "trial " + t + " overlap " + num(max_level1_overlap(r.design)));
    o.expect(tiles_unit_square(r.design), "trial " + t + " is not a tiling");
    const auto again = refine(r.design);
    o.expect(max_leaf_shift(again.design, r.design) <= 1e-12, "trial " + t + " is not idempotent");
  }

  const auto pin = synth::design_from(
      std::vector<synth::Rect>{{0, 0, 0.6, 0.4}, {0.6, 0, 1, 0.6}, {0.4, 0.6, 1, 1}, {0, 0.4, 0.4, 1}, {0.4, 0.4, 0.6, 0.6}},
      std::vector<ViewType>(5, ViewType::Text));
  const auto pr = refine(pin);
  o.expect(pr.non_guillotine && !pr.converged, "pinwheel was not flagged");
  if (o.pass) o.detail = "worst area error " + num(worst_area) + " (trial " + std::to_string(worst_trial) + ")";
  return o;
}

Outcome layout_coding() {
  Outcome o;
  LayoutRegistry reg;
  const auto v = layout_code(columns(ViewType::Bar, 0.5, ViewType::Line), reg);
  const auto h = layout_code(
      synth::design_from(std::vector<BBox>{BBox::from_edges(0, 0, 1, 0.5), BBox::from_edges(0, 0.5, 1, 1)},
                         {ViewType::Bar, ViewType::Line}),
      reg);
  o.expect(v.str() == "2A", "vertical halves coded " + v.str());
  o.expect(h.str() == "2B", "horizontal halves coded " + h.str());

  std::mt19937_64 rng(1004);
  std::vector<std::string> sigs;
  for (int trial = 0; trial < 100; ++trial) {
    const auto rects = synth::realize(synth::random_shape(2 + trial % 10, rng), rng);
    const auto base = signature(rects);
    sigs.push_back(base);
    const auto t = std::to_string(trial);
    o.expect(signature(synth::warp(rects, synth::Warp::random(rng), synth::Warp::random(rng))) == base,
             "trial " + t + " changed under resizing");
    o.expect(signature(synth::mirror_x(rects)) == base, "trial " + t + " changed under a horizontal mirror");
    o.expect(signature(synth::mirror_y(rects)) == base, "trial " + t + " changed under a vertical mirror");
  }
  LayoutRegistry first;
  first.assign_all(sigs);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(sigs.begin(), sigs.end(), rng);
    LayoutRegistry other;
    other.assign_all(sigs);
    o.expect(other.to_json() == first.to_json(), "registry depends on ingest order");
  }
  return o;
}

Outcome mutual_information_checks() {
  Outcome o;
  std::mt19937_64 rng(1005);
  std::uniform_real_distribution<double> u(0.0, 1.0 / 9.0);
  std::bernoulli_distribution zero(0.75);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    CompositionTensor a;
    CompositionTensor b;
    for (auto& v : a.values) v = zero(rng) ? 0.0 : u(rng);
    for (auto& v : b.values) v = zero(rng) ? 0.0 : u(rng);
    if (i % 4 == 0) b = composition_tensor(synth::random_mv(2 + i % 7, rng));
    const double ab = mutual_information(a, b);
    o.expect(ab == mutual_information(b, a), "pair " + std::to_string(i) + " not symmetric");
    o.expect(ab >= 0.0, "pair " + std::to_string(i) + " negative");
    worst = std::max(worst, std::abs(ab - oracle_mi(a, b)));
  }
  o.expect(worst <= 1e-12, "oracle mismatch " + num(worst));
  for (int i = 0; i < 50; ++i) {
    const auto mv = synth::random_mv(2 + i % 8, rng);
    const auto base = sketch_tensor(sketch_of(mv, 1.0, 0.0, 0.0));
    const auto moved = sketch_tensor(sketch_of(mv, 731.0, -55.5, 240.25));
    for (std::size_t k = 0; k < kTensorSize; ++k) {
      o.expect(std::abs(base.values[k] - moved.values[k]) <= 1e-12, "sketch tensor changed under translation/scale");
    }
  }
  if (o.pass) o.detail = "max oracle difference " + num(worst);
  return o;
}

Outcome recommendation() {
  Outcome o;
  std::mt19937_64 rng(1006);
  std::vector<CorpusEntry> corpus;
  std::vector<MVDesign> designs;
  for (int i = 0; i < 20; ++i) {
    designs.push_back(synth::random_mv(2 + i % 6, rng));
    const auto& mv = designs.back();
    corpus.push_back({"10.4242/mv" + std::to_string(100 + i), composition_tensor(mv),
                      LayoutCode{static_cast<int>(leaf_count(mv)), "A"}, leaf_count(mv)});
  }
  const std::size_t member = 7;
  const auto sketch = sketch_of(designs[member], 900.0, 15.0, 30.0);
  auto render = [&] {
    std::string s;
    for (const auto& r : recommend(corpus, sketch, {}, 0)) {
      s += std::to_string(r.rank) + "," + r.doi + "," + num(r.score) + "\n";
    }
    return s;
  };
  const auto results = recommend(corpus, sketch, {}, 0);
  const double top = results.front().score;
  const auto it = std::find_if(results.begin(), results.end(),
                               [&](const Recommendation& r) { return r.doi == corpus[member].doi; });
  o.expect(it != results.end() && it->score == top, "member is not in the top tie group");

  const auto q = sketch_tensor(sketch);
  std::vector<std::pair<double, std::string>> expect;
  for (const auto& e : corpus) expect.emplace_back(oracle_mi(q, e.tensor), e.doi);
  std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t i = 0; i < results.size(); ++i) {
    o.expect(results[i].doi == expect[i].second && std::abs(results[i].score - expect[i].first) <= 1e-12,
             "rank " + std::to_string(i + 1) + " differs from the oracle");
  }
  const auto first = render();
  for (int k = 0; k < 5; ++k) o.expect(render() == first, "ranking output differs between runs");
  return o;
}

Outcome reference_corpus() {
  Outcome o;
  const char* dir = std::getenv("MVLAB_REFERENCE_CORPUS");
  if (dir == nullptr || *dir == '\0') {
    o.skipped = true;
    o.detail = "set MVLAB_REFERENCE_CORPUS to an annotation directory to run";
    return o;
  }
  const auto r = ingest(dir);
  const auto& lib = r.library;
  o.expect(lib.corpus.n() == 360, "ingested " + std::to_string(lib.corpus.n()) + " MVs, expected 360");

  const auto hist = view_count_distribution(lib.corpus);
  const std::map<int, std::size_t> expected_hist{{2, 43}, {3, 68}, {4, 61}, {5, 52}};
  for (const auto& [k, n] : expected_hist) {
    const auto got = hist.contains(k) ? hist.at(k) : 0;
    o.expect(got == n, std::to_string(k) + "-view MVs: " + std::to_string(got) + ", expected " + std::to_string(n));
  }

  const auto freq = type_frequency(lib.corpus);
  const std::vector<std::pair<ViewType, double>> expected_freq{
      {ViewType::Panel, 68.3}, {ViewType::TreesNetworks, 33.3}, {ViewType::Line, 32.5},
      {ViewType::Bar, 32.2},   {ViewType::SciVis, 8.3},         {ViewType::Circle, 1.6}};
  for (const auto& [t, pct] : expected_freq) {
    const double got = 100.0 * freq[index_of(t)];
    o.expect(std::abs(got - pct) <= 0.5, std::string(canonical_name(t)) + " frequency " + num(got) + "%");
  }

  const auto codes = lib.registry.size();
  std::set<LayoutCode> used(lib.codes.begin(), lib.codes.end());
  o.expect(used.size() >= 95 && used.size() <= 101, "distinct layout codes " + std::to_string(used.size()));

  const auto m = conditional_probability(lib.corpus);
  const auto p = m.at(ViewType::Panel, ViewType::SciVis);
  o.expect(p.has_value() && std::abs(*p - 0.80) <= 0.02, "P(Panel|SciVis) = " + (p ? num(*p) : std::string("null")));
  if (o.pass) o.detail = std::to_string(used.size()) + " codes, registry " + std::to_string(codes);
  return o;
}

}  // namespace

int main() {
  Tally t;
  t.run("position-grid-example", 1, position_grid_example);
  t.run("conditional-probability-oracle", 10, conditional_probability_oracle);
  t.run("position-change-and-stability", 5, position_change_properties);
  t.run("refinement", 30, refinement_fuzz);
  t.run("layout-coding", 10, layout_coding);
  t.run("mutual-information", 10, mutual_information_checks);
  t.run("recommendation", 5, recommendation);
  t.run("reference-corpus", 120, reference_corpus);
  std::printf("%s\n", t.failed == 0 ? "ALL PASS" : (std::to_string(t.failed) + " FAILED").c_str());
  return t.failed == 0 ? 0 : 1;
}
