#pragma once

// Exhaustive reference decoders. They share the objective and constraint
// semantics of the real decoders but none of their search machinery, and are
// only usable on tiny instances.

#include <cstddef>
#include <span>

#include "spanrel/constraints.hpp"
#include "spanrel/decode.hpp"

namespace spanrel {

struct OracleCaps {
  std::size_t max_spans = 6;
  std::size_t max_relations = 6;
  std::size_t max_intervals = 20;
};

enum class OracleMode { kJoint, kEntityFirst, kRelationFirst };

// Enumerates every labeling (or every interval subset for the entity-first
// selection step) and keeps the first strict maximum in enumeration order.
// Throws std::length_error when the instance exceeds `caps`.
DecodedStructure brute_force_oracle(const ScoredInstance& inst, const ConstraintSet& constraints,
                                    OracleMode mode, const DecodeOptions& options = {},
                                    const OracleCaps& caps = {});

// 2^n subset sweep for the max-weight non-overlapping interval problem.
IntervalSelection brute_force_intervals(std::span<const Interval> intervals,
                                        std::size_t max_intervals = 20);

}  // namespace spanrel
