// encoding.hpp - twofold layout codes ("2A", "3C", ...).
//
// The number counts level-1 nodes. The letter identifies the slice-and-dice
// structure of the refined layout: the layout is cut recursively by full-width
// or full-height lines (vertical first), children of every cut are sorted so
// that mirrored and resized layouts share a signature, and letters follow a
// fixed enumeration of all signatures with the same number of leaves.
// Layouts that cannot be sliced completely get "Z1", "Z2", ... per count.

#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvlab/model.hpp"

namespace mvlab {

/// Tolerance for cut detection, in normalized units.
inline constexpr double kCutEps = 1e-6;

/// Largest leaf count whose signatures are enumerated exhaustively.
inline constexpr std::size_t kMaxEnumeratedLeaves = 14;

struct SlicingTree {
  enum class Kind { Leaf, Vertical, Horizontal, Block };

  Kind kind = Kind::Leaf;
  /// Left to right for Vertical, top to bottom for Horizontal.
  std::vector<SlicingTree> children;
  /// Absolute positions of the cuts between consecutive children.
  std::vector<double> cuts;
  /// Leaf: index of the level-1 node. Block: unused.
  std::size_t node = 0;
  /// Block: number of level-1 nodes no full cut separates.
  std::size_t block_size = 0;

  std::size_t leaf_count() const noexcept;
};

bool is_guillotine(const SlicingTree& tree) noexcept;

/// Throws E_NOT_REFINED when level-1 boxes overlap or leave the display.
SlicingTree slicing_tree(const MVDesign& mv);

/// "L" for a leaf, "V(...)"/"H(...)" with sorted children, "P<k>" for an
/// unsliceable block of k nodes.
std::string canonical_signature(const SlicingTree& tree);

/// Number of level-1 nodes encoded by a signature.
std::size_t signature_leaves(std::string_view signature);

/// All guillotine signatures with `leaves` leaves in letter order. Throws
/// E_INVALID_ARGUMENT above kMaxEnumeratedLeaves.
const std::vector<std::string>& enumerate_signatures(std::size_t leaves);

/// 0 -> "A", 25 -> "Z", 26 -> "AA", ...
std::string letter_for_index(std::size_t index);

struct LayoutCode {
  int count = 0;
  std::string letter;

  std::string str() const { return std::to_string(count) + letter; }
  bool non_guillotine() const noexcept { return letter.size() > 1 && letter.front() == 'Z' &&
                                                letter[1] >= '0' && letter[1] <= '9'; }

  static std::optional<LayoutCode> parse(std::string_view text);

  friend bool operator==(const LayoutCode&, const LayoutCode&) = default;
  friend auto operator<=>(const LayoutCode&, const LayoutCode&) = default;
};

class LayoutRegistry {
 public:
  struct Entry {
    std::size_t count = 0;
    std::string letter;
  };

  /// Pre-assigns letters for a whole corpus. Z letters are numbered in sorted
  /// signature order, so the result does not depend on the input order.
  void assign_all(std::vector<std::string> signatures);

  /// Looks up `signature`, assigning a letter if it is new.
  std::string letter_for(const std::string& signature);

  std::optional<std::string> find(const std::string& signature) const;

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::string to_json() const;
  /// Throws E_MALFORMED.
  static LayoutRegistry from_json(std::string_view text);

  friend bool operator==(const LayoutRegistry& a, const LayoutRegistry& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::string assign(const std::string& signature);

  std::map<std::string, Entry> entries_;
  std::map<std::size_t, std::size_t> z_counter_;
  std::map<std::size_t, std::size_t> overflow_counter_;
};

inline bool operator==(const LayoutRegistry::Entry& a, const LayoutRegistry::Entry& b) {
  return a.count == b.count && a.letter == b.letter;
}

/// Count of level-1 nodes plus the registry letter of the layout's signature.
LayoutCode layout_code(const MVDesign& mv, LayoutRegistry& registry);

}  // namespace mvlab
