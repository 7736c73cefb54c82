#pragma once

// Decoding: turn per-candidate logits into a typed entity/relation structure.
//
//   unconstrained   per-candidate argmax; may overlap, may be inconsistent
//   entity-first    argmax entities -> max-weight non-overlapping subset ->
//                   per-relation argmax of logit + bias with forbidden triples
//                   masked
//   joint           exact maximizer of the full-assignment score under all
//                   constraints (branch and bound)
//   relation-first  exact relation labeling subject to satisfiability, then
//                   exact entity labeling given the relations
//
// Every decoder reports `objective` as the full-assignment score of its output:
// the chosen logit of every span candidate (null included) plus, for every
// relation candidate, its chosen logit and, when a bias table is in use,
// b(head type, tail type, relation type). Unconstrained decoding never adds
// bias.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spanrel/constraints.hpp"
#include "spanrel/numerics.hpp"
#include "spanrel/repr.hpp"

namespace spanrel {

struct ScoredSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  Vector logits;        // |E|, column 0 non-entity
};

struct ScoredRelation {
  std::size_t head = 0;  // index into ScoredInstance::spans
  std::size_t tail = 0;
  Vector logits;  // |R|, column 0 no-relation
};

struct ScoredInstance {
  std::size_t length = 0;
  std::vector<std::string> tokens;  // may be empty when only the length is known
  TypeInventory types;
  std::vector<ScoredSpan> spans;
  std::vector<ScoredRelation> relations;
  std::optional<BiasTable> bias;

  // Throws std::invalid_argument describing the first broken invariant.
  void validate() const;
};

struct DecodedEntity {
  std::size_t span = 0;  // index into ScoredInstance::spans
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t type = 0;
  double score = 0.0;

  friend bool operator==(const DecodedEntity&, const DecodedEntity&) = default;
};

struct DecodedRelation {
  std::size_t relation = 0;  // index into ScoredInstance::relations
  std::size_t head = 0;      // span index of the head argument
  std::size_t tail = 0;      // span index of the tail argument
  std::size_t type = 0;
  double score = 0.0;

  friend bool operator==(const DecodedRelation&, const DecodedRelation&) = default;
};

// Entities are sorted by span index, relations by relation index.
struct DecodedStructure {
  std::vector<DecodedEntity> entities;
  std::vector<DecodedRelation> relations;
  double objective = 0.0;

  // Labels only; scores and objective are ignored.
  bool same_labels(const DecodedStructure& other) const;
};

enum class Algorithm { kUnconstrained, kEntityFirst, kJoint, kRelationFirst };

std::string_view algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct DecodeOptions {
  bool use_bias = true;            // ignored when the instance has no bias table
  std::size_t budget = 2'000'000;  // search nodes per exact solve
};

struct Interval {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  double weight = 0.0;
};

struct IntervalSelection {
  std::vector<std::size_t> chosen;  // ascending input indices
  double total = 0.0;
};

// Weighted interval scheduling: sort by end, predecessor by binary search,
// O(n log n). On equal totals the later-sorted interval is left out.
// Intervals with non-positive weight are never chosen.
IntervalSelection max_weight_nonoverlap(std::span<const Interval> intervals);

DecodedStructure unconstrained_decode(const ScoredInstance& inst);
std::vector<DecodedEntity> unconstrained_entities(const ScoredInstance& inst);
std::vector<DecodedRelation> unconstrained_relations(const ScoredInstance& inst);

DecodedStructure entity_first_decode(const ScoredInstance& inst, const ConstraintSet& constraints,
                                     const DecodeOptions& options = {});

// Throws BudgetExceeded when the search outgrows options.budget.
DecodedStructure joint_decode(const ScoredInstance& inst, const ConstraintSet& constraints,
                              const DecodeOptions& options = {});
DecodedStructure relation_first_decode(const ScoredInstance& inst,
                                       const ConstraintSet& constraints,
                                       const DecodeOptions& options = {});

DecodedStructure decode(Algorithm algorithm, const ScoredInstance& inst,
                        const ConstraintSet& constraints, const DecodeOptions& options = {});

// Full-assignment score of `s` under the given scoring (see file comment).
double structure_objective(const DecodedStructure& s, const ScoredInstance& inst, bool use_bias);

struct Violation {
  std::string constraint;  // "unique-type", "non-overlap", "consistency", "whitelist"
  std::string message;
};

// Empty iff the structure satisfies every constraint. Throws std::out_of_range
// for references that do not resolve against `inst`.
std::vector<Violation> check_constraints(const DecodedStructure& s,
                                         const ConstraintSet& constraints,
                                         const ScoredInstance& inst);

}  // namespace spanrel
