#pragma once

// Seeded random ScoredInstances for fuzzing, oracle comparisons and the
// throughput benchmark.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spanrel/decode.hpp"
#include "spanrel/numerics.hpp"
#include "spanrel/repr.hpp"

namespace spanrel {

struct SyntheticSpec {
  std::size_t length = 20;
  std::size_t max_width = 4;
  std::size_t spans = 20;      // capped by the number of valid slots
  std::size_t relations = 20;  // capped by spans * (spans - 1)
  TypeInventory types;
  double logit_scale = 3.0;  // logits uniform in [-scale, scale]
  double null_offset = 1.0;  // added to the null column so most candidates stay null
  // When positive, logits are rounded to multiples of `quantum` to provoke
  // ties.
  double quantum = 0.0;
  bool with_bias = false;  // random bias table, entries in [-1, 1]
};

// Spans are distinct (start, end) pairs in enumeration order; relations are
// distinct ordered pairs of distinct spans.
ScoredInstance synthetic_instance(const SyntheticSpec& spec, Rng& rng);

// `count` instances from one Rng seeded with `seed`.
std::vector<ScoredInstance> synthetic_instances(const SyntheticSpec& spec, std::size_t count,
                                                std::uint64_t seed);

// CoNLL04 label set: Peop, Org, Loc / Work_For, Live_in, OrgBased_in,
// Located_in, Kill.
TypeInventory conll04_types();

}  // namespace spanrel
