#pragma once

// Task constraints (unique type, non-overlap, consistency) and dataset
// whitelists of (head type, tail type) -> allowed relation types.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spanrel/repr.hpp"

namespace spanrel {

struct AllowedRow {
  std::string head;
  std::string tail;
  std::vector<std::string> relations;
};

struct ConstraintSet {
  std::string name;
  std::vector<std::string> entity_types;    // non-null names the whitelist may use
  std::vector<std::string> relation_types;  // non-null names the whitelist may use
  // Unlisted (head, tail) pairs admit only no-relation when true, anything
  // when false.
  bool closed_world = true;
  bool non_overlap = true;
  bool consistency = true;
  std::vector<AllowedRow> allowed;

  std::size_t triple_count() const;

  // Task constraints with no dataset whitelist.
  static ConstraintSet task_only();
};

// Throws FormatError with a JSON-pointer location on malformed input or
// unknown type names.
ConstraintSet load_constraints(const std::filesystem::path& path);
ConstraintSet parse_constraints(const std::string& json_text, const std::string& source = "");
std::string constraints_to_json(const ConstraintSet& constraints);

// A ConstraintSet resolved against a concrete type inventory.
class BoundConstraints {
 public:
  // Throws std::invalid_argument if the whitelist names a type the inventory
  // lacks.
  BoundConstraints(const ConstraintSet& constraints, const TypeInventory& types);

  std::size_t num_entity_types() const { return e_; }
  std::size_t num_relation_types() const { return r_; }
  bool non_overlap() const { return non_overlap_; }
  bool consistency() const { return consistency_; }

  // Dataset whitelist alone. No-relation is always allowed.
  bool whitelisted(std::size_t head, std::size_t tail, std::size_t relation) const {
    return relation == 0 || table_[(head * e_ + tail) * r_ + relation] != 0;
  }

  // Whether a relation labeled `relation` may sit between entities typed
  // `head` and `tail`: consistency plus whitelist.
  bool admissible(std::size_t head, std::size_t tail, std::size_t relation) const {
    if (relation == 0) return true;
    if (consistency_ && (head == 0 || tail == 0)) return false;
    return whitelisted(head, tail, relation);
  }

 private:
  std::size_t e_ = 0;
  std::size_t r_ = 0;
  bool non_overlap_ = true;
  bool consistency_ = true;
  std::vector<std::uint8_t> table_;
};

// Closed-interval token overlap.
inline bool spans_overlap(std::size_t s1, std::size_t e1, std::size_t s2, std::size_t e2) {
  return std::max(s1, s2) <= std::min(e1, e2);
}

}  // namespace spanrel
