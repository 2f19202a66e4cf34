#include "mvlab/encoding.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <mutex>
#include <utility>

#include "json_util.hpp"
#include "mvlab/error.hpp"

namespace mvlab {

using detail::json;

namespace {

struct Span {
  double l, t, r, b;
};

Span span_of(const BBox& box) { return {box.left(), box.top(), box.right(), box.bottom()}; }

// Valid cut positions strictly inside [lo, hi] along one axis.
std::vector<double> find_cuts(const std::vector<Span>& spans, const std::vector<std::size_t>& members,
                              double lo, double hi, bool vertical) {
  std::vector<double> candidates;
  for (auto m : members) {
    const auto& s = spans[m];
    for (double v : vertical ? std::array{s.l, s.r} : std::array{s.t, s.b}) {
      if (v > lo + kCutEps && v < hi - kCutEps) candidates.push_back(v);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<double> cuts;
  for (double c : candidates) {
    if (!cuts.empty() && c - cuts.back() <= kCutEps) continue;
    const bool clean = std::all_of(members.begin(), members.end(), [&](std::size_t m) {
      const auto& s = spans[m];
      const double a = vertical ? s.l : s.t;
      const double b = vertical ? s.r : s.b;
      return b <= c + kCutEps || a >= c - kCutEps;
    });
    if (clean) cuts.push_back(c);
  }
  return cuts;
}

SlicingTree slice(const std::vector<Span>& spans, const std::vector<std::size_t>& members,
                  Span region) {
  SlicingTree tree;
  if (members.size() == 1) {
    tree.node = members.front();
    return tree;
  }
  for (bool vertical : {true, false}) {
    auto cuts = vertical ? find_cuts(spans, members, region.l, region.r, true)
                         : find_cuts(spans, members, region.t, region.b, false);
    if (cuts.empty()) continue;
    tree.kind = vertical ? SlicingTree::Kind::Vertical : SlicingTree::Kind::Horizontal;
    std::vector<std::vector<std::size_t>> slabs(cuts.size() + 1);
    for (auto m : members) {
      const auto& s = spans[m];
      const double center = vertical ? (s.l + s.r) / 2.0 : (s.t + s.b) / 2.0;
      const auto slot = static_cast<std::size_t>(
          std::upper_bound(cuts.begin(), cuts.end(), center) - cuts.begin());
      slabs[slot].push_back(m);
    }
    std::vector<double> kept;
    for (std::size_t k = 0; k < slabs.size(); ++k) {
      if (slabs[k].empty()) continue;  // a gap between two cuts
      if (!tree.children.empty()) kept.push_back(cuts[k - 1]);
      Span sub = region;
      const double lo = k == 0 ? (vertical ? region.l : region.t) : cuts[k - 1];
      const double hi = k == cuts.size() ? (vertical ? region.r : region.b) : cuts[k];
      if (vertical) {
        sub.l = lo;
        sub.r = hi;
      } else {
        sub.t = lo;
        sub.b = hi;
      }
      tree.children.push_back(slice(spans, slabs[k], sub));
    }
    tree.cuts = std::move(kept);
    if (tree.children.size() == 1) return std::move(tree.children.front());
    return tree;
  }
  tree.kind = SlicingTree::Kind::Block;
  tree.block_size = members.size();
  return tree;
}

struct Keyed {
  std::size_t leaves;
  std::string sig;
};

bool key_less(const Keyed& a, const Keyed& b) {
  if (a.leaves != b.leaves) return a.leaves < b.leaves;
  return a.sig < b.sig;
}

std::string compose(char orientation, const std::vector<Keyed>& children) {
  std::string out(1, orientation);
  out += '(';
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (i) out += ',';
    out += children[i].sig;
  }
  out += ')';
  return out;
}

// Enumeration of canonical slicing trees by leaf count and root orientation.
class Enumerator {
 public:
  const std::vector<std::string>& all(std::size_t n) {
    std::lock_guard lock(mutex_);
    if (n > kMaxEnumeratedLeaves) {
      throw Error(ErrorCode::InvalidArgument, "layouts with more than " +
                                                  std::to_string(kMaxEnumeratedLeaves) +
                                                  " nodes are not enumerated");
    }
    if (auto it = ordered_.find(n); it != ordered_.end()) return it->second;
    std::vector<std::string> out;
    if (n == 1) {
      out.push_back("L");
    } else {
      for (char o : {'V', 'H'}) {
        for (const auto& t : rooted(n, o)) out.push_back(t.sig);
      }
    }
    return ordered_.emplace(n, std::move(out)).first->second;
  }

 private:
  struct Tree {
    std::string sig;
    std::vector<Keyed> children;
  };

  // Trees with n >= 2 leaves whose root cut is `o`, in canonical order.
  const std::vector<Tree>& rooted(std::size_t n, char o) {
    const auto key = std::make_pair(n, o);
    if (auto it = rooted_.find(key); it != rooted_.end()) return it->second;

    // Pool of possible children: a leaf, or a tree rooted in the other orientation.
    const char other = o == 'V' ? 'H' : 'V';
    std::vector<Keyed> pool{{1, "L"}};
    for (std::size_t k = 2; k < n; ++k) {
      for (const auto& t : rooted(k, other)) pool.push_back({k, t.sig});
    }
    std::sort(pool.begin(), pool.end(), key_less);

    std::vector<Tree> trees;
    std::vector<Keyed> chosen;
    generate(pool, 0, n, o, chosen, trees);
    std::sort(trees.begin(), trees.end(), [](const Tree& a, const Tree& b) {
      return std::lexicographical_compare(a.children.begin(), a.children.end(), b.children.begin(),
                                          b.children.end(), key_less);
    });
    return rooted_.emplace(key, std::move(trees)).first->second;
  }

  void generate(const std::vector<Keyed>& pool, std::size_t from, std::size_t remaining, char o,
                std::vector<Keyed>& chosen, std::vector<Tree>& out) {
    if (remaining == 0) {
      if (chosen.size() >= 2) out.push_back({compose(o, chosen), chosen});
      return;
    }
    for (std::size_t i = from; i < pool.size(); ++i) {
      if (pool[i].leaves > remaining) break;
      // A single child spanning everything is not a cut.
      if (chosen.empty() && pool[i].leaves == remaining) break;
      chosen.push_back(pool[i]);
      generate(pool, i, remaining - pool[i].leaves, o, chosen, out);
      chosen.pop_back();
    }
  }

  std::mutex mutex_;
  std::map<std::size_t, std::vector<std::string>> ordered_;
  std::map<std::pair<std::size_t, char>, std::vector<Tree>> rooted_;
};

Enumerator& enumerator() {
  static Enumerator instance;
  return instance;
}

std::optional<std::size_t> enumeration_rank(const std::string& signature, std::size_t leaves) {
  const auto& all = enumerate_signatures(leaves);
  auto it = std::find(all.begin(), all.end(), signature);
  if (it == all.end()) return std::nullopt;
  return static_cast<std::size_t>(it - all.begin());
}

Keyed keyed(const SlicingTree& t) { return {t.leaf_count(), canonical_signature(t)}; }

}  // namespace

std::size_t SlicingTree::leaf_count() const noexcept {
  switch (kind) {
    case Kind::Leaf: return 1;
    case Kind::Block: return block_size;
    default: break;
  }
  std::size_t n = 0;
  for (const auto& c : children) n += c.leaf_count();
  return n;
}

bool is_guillotine(const SlicingTree& tree) noexcept {
  if (tree.kind == SlicingTree::Kind::Block) return false;
  return std::all_of(tree.children.begin(), tree.children.end(),
                     [](const SlicingTree& c) { return is_guillotine(c); });
}

SlicingTree slicing_tree(const MVDesign& mv) {
  if (mv.nodes.empty()) throw Error(ErrorCode::NotRefined, "design has no views");
  std::vector<Span> spans;
  for (const auto& node : mv.nodes) {
    const auto& box = node_bbox(node);
    if (!inside_unit_square(box, kCutEps)) {
      throw Error(ErrorCode::NotRefined, "view " + node_id(node) + " leaves the display");
    }
    spans.push_back(span_of(box));
  }
  if (max_level1_overlap(mv) >= kAreaEps || level1_area(mv) > 1.0 + kAreaEps) {
    throw Error(ErrorCode::NotRefined, "level-1 views overlap; refine the layout first");
  }
  std::vector<std::size_t> members(spans.size());
  for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
  return slice(spans, members, Span{0.0, 0.0, 1.0, 1.0});
}

std::string canonical_signature(const SlicingTree& tree) {
  switch (tree.kind) {
    case SlicingTree::Kind::Leaf: return "L";
    case SlicingTree::Kind::Block: return "P" + std::to_string(tree.block_size);
    default: break;
  }
  std::vector<Keyed> children;
  for (const auto& c : tree.children) children.push_back(keyed(c));
  std::sort(children.begin(), children.end(), key_less);
  return compose(tree.kind == SlicingTree::Kind::Vertical ? 'V' : 'H', children);
}

std::size_t signature_leaves(std::string_view signature) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < signature.size(); ++i) {
    if (signature[i] == 'L') {
      ++n;
    } else if (signature[i] == 'P') {
      std::size_t k = 0;
      while (i + 1 < signature.size() && std::isdigit(static_cast<unsigned char>(signature[i + 1]))) {
        k = k * 10 + static_cast<std::size_t>(signature[++i] - '0');
      }
      n += k;
    }
  }
  return n;
}

const std::vector<std::string>& enumerate_signatures(std::size_t leaves) {
  if (leaves == 0) throw Error(ErrorCode::InvalidArgument, "a layout has at least one node");
  return enumerator().all(leaves);
}

std::string letter_for_index(std::size_t index) {
  std::string out;
  ++index;
  while (index > 0) {
    --index;
    out.insert(out.begin(), static_cast<char>('A' + index % 26));
    index /= 26;
  }
  return out;
}

std::optional<LayoutCode> LayoutCode::parse(std::string_view text) {
  std::size_t i = 0;
  int count = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    count = count * 10 + (text[i] - '0');
    if (count > 100000) return std::nullopt;
    ++i;
  }
  if (i == 0 || i == text.size()) return std::nullopt;
  const auto letter = text.substr(i);
  std::size_t j = 0;
  while (j < letter.size() && letter[j] >= 'A' && letter[j] <= 'Z') ++j;
  if (j == 0) return std::nullopt;
  if (j < letter.size()) {
    // Only the Z bucket carries a numeric suffix.
    if (letter.substr(0, j) != "Z") return std::nullopt;
    for (std::size_t k = j; k < letter.size(); ++k) {
      if (!std::isdigit(static_cast<unsigned char>(letter[k]))) return std::nullopt;
    }
  }
  return LayoutCode{count, std::string(letter)};
}

void LayoutRegistry::assign_all(std::vector<std::string> signatures) {
  std::sort(signatures.begin(), signatures.end(), [](const std::string& a, const std::string& b) {
    return key_less({signature_leaves(a), a}, {signature_leaves(b), b});
  });
  signatures.erase(std::unique(signatures.begin(), signatures.end()), signatures.end());
  for (const auto& s : signatures) letter_for(s);
}

std::string LayoutRegistry::letter_for(const std::string& signature) {
  if (auto it = entries_.find(signature); it != entries_.end()) return it->second.letter;
  return assign(signature);
}

std::optional<std::string> LayoutRegistry::find(const std::string& signature) const {
  if (auto it = entries_.find(signature); it != entries_.end()) return it->second.letter;
  return std::nullopt;
}

std::string LayoutRegistry::assign(const std::string& signature) {
  const std::size_t count = signature_leaves(signature);
  std::string letter;
  if (signature.find('P') != std::string::npos) {
    letter = "Z" + std::to_string(++z_counter_[count]);
  } else if (count <= kMaxEnumeratedLeaves) {
    auto rank = enumeration_rank(signature, count);
    if (!rank) throw Error(ErrorCode::InvalidArgument, "not a canonical signature: " + signature);
    letter = letter_for_index(*rank);
  } else {
    letter = letter_for_index(overflow_counter_[count]++);
  }
  entries_[signature] = Entry{count, letter};
  return letter;
}

std::string LayoutRegistry::to_json() const {
  json layouts = json::array();
  std::vector<std::pair<std::string, Entry>> rows(entries_.begin(), entries_.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count < b.second.count;
    return a.first < b.first;
  });
  for (const auto& [sig, entry] : rows) {
    layouts.push_back(json{{"signature", sig}, {"count", entry.count}, {"letter", entry.letter}});
  }
  json root{{"schema_version", 1}, {"layouts", std::move(layouts)}};
  return detail::canonical_dump(root, detail::RealFormat::RoundTrip);
}

LayoutRegistry LayoutRegistry::from_json(std::string_view text) {
  LayoutRegistry reg;
  try {
    const auto root = json::parse(text.begin(), text.end());
    for (const auto& row : root.at("layouts")) {
      Entry e{row.at("count").get<std::size_t>(), row.at("letter").get<std::string>()};
      const auto sig = row.at("signature").get<std::string>();
      if (e.letter.size() > 1 && e.letter.front() == 'Z' && std::isdigit(static_cast<unsigned char>(e.letter[1]))) {
        const std::size_t k = std::stoul(e.letter.substr(1));
        reg.z_counter_[e.count] = std::max(reg.z_counter_[e.count], k);
      } else if (e.count > kMaxEnumeratedLeaves) {
        ++reg.overflow_counter_[e.count];
      }
      reg.entries_[sig] = std::move(e);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Malformed, std::string("layout registry: ") + e.what());
  }
  return reg;
}

LayoutCode layout_code(const MVDesign& mv, LayoutRegistry& registry) {
  const auto tree = slicing_tree(mv);
  return LayoutCode{static_cast<int>(mv.nodes.size()), registry.letter_for(canonical_signature(tree))};
}

}  // namespace mvlab
