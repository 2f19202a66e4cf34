#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "mvlab/encoding.hpp"
#include "mvlab/error.hpp"
#include "synth.hpp"

using namespace mvlab;

namespace {

MVDesign boxes(std::vector<synth::Rect> rects) {
  return synth::design_from(rects, std::vector<ViewType>(rects.size(), ViewType::Bar));
}

std::string signature(const MVDesign& mv) { return canonical_signature(slicing_tree(mv)); }

MVDesign pinwheel() {
  return boxes({{0, 0, 0.6, 0.4}, {0.6, 0, 1, 0.6}, {0.4, 0.6, 1, 1}, {0, 0.4, 0.4, 1}, {0.4, 0.4, 0.6, 0.6}});
}

}  // namespace

TEST_CASE("halves") {
  const auto v = boxes({{0, 0, 0.5, 1}, {0.5, 0, 1, 1}});
  const auto h = boxes({{0, 0, 1, 0.5}, {0, 0.5, 1, 1}});
  const auto tv = slicing_tree(v);
  CHECK(tv.kind == SlicingTree::Kind::Vertical);
  REQUIRE(tv.children.size() == 2);
  CHECK(tv.cuts == std::vector<double>{0.5});
  CHECK(canonical_signature(tv) == "V(L,L)");
  CHECK(signature(h) == "H(L,L)");
  LayoutRegistry reg;
  CHECK(layout_code(v, reg).str() == "2A");
  CHECK(layout_code(h, reg).str() == "2B");
}

TEST_CASE("small enumerations") {
  CHECK(enumerate_signatures(1) == std::vector<std::string>{"L"});
  CHECK(enumerate_signatures(2) == std::vector<std::string>{"V(L,L)", "H(L,L)"});
  const auto& three = enumerate_signatures(3);
  CHECK(three.size() == 4);
  CHECK(three.front() == "V(L,L,L)");
  CHECK(std::count_if(three.begin(), three.end(), [](const std::string& s) { return s[0] == 'V'; }) == 2);
  // Unordered series-parallel structures: 1, 2, 4, 10, 24, 66, 180.
  CHECK(enumerate_signatures(4).size() == 10);
  CHECK(enumerate_signatures(5).size() == 24);
  CHECK(enumerate_signatures(6).size() == 66);
  CHECK(enumerate_signatures(7).size() == 180);
  CHECK_THROWS_AS(enumerate_signatures(kMaxEnumeratedLeaves + 1), Error);
  for (std::size_t n = 1; n <= 7; ++n) {
    for (const auto& s : enumerate_signatures(n)) CHECK(signature_leaves(s) == n);
    const auto& all = enumerate_signatures(n);
    CHECK(std::set<std::string>(all.begin(), all.end()).size() == all.size());
  }
}

TEST_CASE("three columns take the first three-view letter") {
  LayoutRegistry reg;
  const auto code = layout_code(boxes({{0, 0, 0.3, 1}, {0.3, 0, 0.6, 1}, {0.6, 0, 1, 1}}), reg);
  CHECK(code.str() == "3A");
}

TEST_CASE("small multiples count once") {
  MVDesign mv;
  mv.nodes.emplace_back(View{ViewType::Map, BBox::from_edges(0, 0, 0.5, 1), "1"});
  mv.nodes.emplace_back(SmallMultiples{2, BBox::from_edges(0.5, 0, 1, 0.6),
                                       {View{ViewType::Line, BBox::from_edges(0.5, 0, 1, 0.2), "2.1"},
                                        View{ViewType::Line, BBox::from_edges(0.5, 0.2, 1, 0.4), "2.2"},
                                        View{ViewType::Line, BBox::from_edges(0.5, 0.4, 1, 0.6), "2.3"}}});
  mv.nodes.emplace_back(View{ViewType::Table, BBox::from_edges(0.5, 0.6, 1, 1), "3"});
  LayoutRegistry reg;
  const auto code = layout_code(mv, reg);
  CHECK(code.count == 3);
  CHECK(signature(mv) == "V(L,H(L,L))");
}

TEST_CASE("pinwheel is not guillotine") {
  const auto t = slicing_tree(pinwheel());
  CHECK_FALSE(is_guillotine(t));
  CHECK(canonical_signature(t) == "P5");
  LayoutRegistry reg;
  const auto code = layout_code(pinwheel(), reg);
  CHECK(code.str() == "5Z1");
  CHECK(code.non_guillotine());
}

TEST_CASE("guillotine block nested under a cut") {
  auto rects = std::vector<synth::Rect>{{0, 0, 0.6, 0.4}, {0.6, 0, 1, 0.6}, {0.4, 0.6, 1, 1},
                                        {0, 0.4, 0.4, 1}, {0.4, 0.4, 0.6, 0.6}};
  for (auto& r : rects) {
    r.l = r.l * 0.5 + 0.5;
    r.r = r.r * 0.5 + 0.5;
  }
  rects.push_back({0, 0, 0.5, 1});
  const auto t = slicing_tree(boxes(rects));
  CHECK(canonical_signature(t) == "V(L,P5)");
  CHECK_FALSE(is_guillotine(t));
}

TEST_CASE("not refined layouts are rejected") {
  try {
    (void)slicing_tree(boxes({{0, 0, 0.6, 1}, {0.5, 0, 1, 1}}));
    FAIL("expected E_NOT_REFINED");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotRefined);
  }
  CHECK_THROWS_AS(slicing_tree(boxes({{0, 0, 0.5, 1}, {0.5, 0, 1.2, 1}})), Error);
}

TEST_CASE("gapped slabs keep cuts aligned with children") {
  const auto t = slicing_tree(boxes({{0, 0, 0.3, 1}, {0.4, 0, 1, 1}}));
  CHECK(t.kind == SlicingTree::Kind::Vertical);
  CHECK(t.children.size() == 2);
  CHECK(t.cuts.size() == 1);
}

TEST_CASE("signatures ignore resizing and mirroring") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto shape = synth::random_shape(2 + trial % 9, rng);
    const auto rects = synth::realize(shape, rng);
    const auto base = signature(boxes(rects));
    INFO("trial " << trial << " " << base);
    CHECK(signature_leaves(base) == rects.size());
    const auto wx = synth::Warp::random(rng);
    const auto wy = synth::Warp::random(rng);
    CHECK(signature(boxes(synth::warp(rects, wx, wy))) == base);
    CHECK(signature(boxes(synth::mirror_x(rects))) == base);
    CHECK(signature(boxes(synth::mirror_y(rects))) == base);
    CHECK(signature(boxes(synth::mirror_x(synth::mirror_y(rects)))) == base);
    const auto& all = enumerate_signatures(rects.size());
    CHECK(std::find(all.begin(), all.end(), base) != all.end());
  }
}

TEST_CASE("registry letters do not depend on ingest order") {
  std::mt19937_64 rng(5);
  std::vector<std::string> sigs;
  for (int i = 0; i < 40; ++i) sigs.push_back(signature(synth::random_mv(2 + i % 6, rng)));
  sigs.push_back("P5");
  sigs.push_back("V(L,P5)");
  LayoutRegistry first;
  first.assign_all(sigs);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(sigs.begin(), sigs.end(), rng);
    LayoutRegistry other;
    other.assign_all(sigs);
    CHECK(other == first);
    CHECK(other.to_json() == first.to_json());
  }
  std::set<std::pair<std::size_t, std::string>> codes;
  for (const auto& [sig, e] : first.entries()) codes.insert({e.count, e.letter});
  CHECK(codes.size() == first.size());
  CHECK(first.find("P5") == "Z1");
  CHECK(first.find("V(L,P5)") == "Z1");
}

TEST_CASE("registry json round trip") {
  LayoutRegistry reg;
  reg.assign_all({"V(L,L)", "H(L,L)", "P4", "V(L,L,L)"});
  const auto back = LayoutRegistry::from_json(reg.to_json());
  CHECK(back == reg);
  auto copy = back;
  CHECK(copy.letter_for("H(L,V(L,L))") == reg.letter_for("H(L,V(L,L))"));
  CHECK_THROWS_AS(LayoutRegistry::from_json("{}"), Error);
}

TEST_CASE("letters and code parsing") {
  CHECK(letter_for_index(0) == "A");
  CHECK(letter_for_index(25) == "Z");
  CHECK(letter_for_index(26) == "AA");
  CHECK(letter_for_index(27) == "AB");
  CHECK(LayoutCode::parse("2A") == LayoutCode{2, "A"});
  CHECK(LayoutCode::parse("12AB") == LayoutCode{12, "AB"});
  CHECK(LayoutCode::parse("5Z3") == LayoutCode{5, "Z3"});
  CHECK_FALSE(LayoutCode::parse("A2").has_value());
  CHECK_FALSE(LayoutCode::parse("2").has_value());
  CHECK_FALSE(LayoutCode::parse("2a").has_value());
  CHECK_FALSE(LayoutCode::parse("2B3").has_value());
}
