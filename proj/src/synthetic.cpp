#include "spanrel/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace spanrel {

namespace {

// First `k` entries of a Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
  idx.resize(k);
  return idx;
}

Vector random_logits(std::size_t n, const SyntheticSpec& spec, Rng& rng) {
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = rng.uniform(-spec.logit_scale, spec.logit_scale);
    if (i == 0) x += spec.null_offset;
    if (spec.quantum > 0.0) x = std::round(x / spec.quantum) * spec.quantum;
    v[i] = x;
  }
  return v;
}

}  // namespace

ScoredInstance synthetic_instance(const SyntheticSpec& spec, Rng& rng) {
  ScoredInstance inst;
  inst.length = std::max<std::size_t>(spec.length, 1);
  inst.types = spec.types;

  std::vector<SpanCandidate> slots;
  for (const auto& c : enumerate_spans(inst.length, std::max<std::size_t>(spec.max_width, 1))) {
    if (c.valid) slots.push_back(c);
  }
  auto picked = sample_without_replacement(slots.size(), spec.spans, rng);
  std::sort(picked.begin(), picked.end());
  for (std::size_t s : picked) {
    inst.spans.push_back({slots[s].start, slots[s].end,
                          random_logits(inst.types.num_entity_types(), spec, rng)});
  }

  const std::size_t k = inst.spans.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t h = 0; h < k; ++h) {
    for (std::size_t t = 0; t < k; ++t) {
      if (h != t) pairs.emplace_back(h, t);
    }
  }
  auto chosen = sample_without_replacement(pairs.size(), spec.relations, rng);
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t p : chosen) {
    inst.relations.push_back({pairs[p].first, pairs[p].second,
                              random_logits(inst.types.num_relation_types(), spec, rng)});
  }

  if (spec.with_bias) {
    BiasTable b = BiasTable::zeros(inst.types.num_entity_types(), inst.types.num_relation_types());
    for (double& v : b.phi_htr) v = rng.uniform(-1.0, 1.0);
    for (Matrix* m : {&b.phi_hr, &b.phi_tr, &b.phi_ht}) {
      for (double& v : m->data()) v = rng.uniform(-1.0, 1.0);
    }
    inst.bias = std::move(b);
  }
  return inst;
}

std::vector<ScoredInstance> synthetic_instances(const SyntheticSpec& spec, std::size_t count,
                                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScoredInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(synthetic_instance(spec, rng));
  return out;
}

TypeInventory conll04_types() {
  return TypeInventory({"Peop", "Org", "Loc"},
                       {"Work_For", "Live_in", "OrgBased_in", "Located_in", "Kill"});
}

}  // namespace spanrel
