#include "spanrel/oracle.hpp"

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace spanrel {

namespace {

constexpr double kNone = -std::numeric_limits<double>::infinity();

// Advances `digits` as a base-`radix` counter; false after the last value.
bool next_labeling(std::vector<std::size_t>& digits, std::size_t radix) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < radix) return true;
    digits[i] = 0;
  }
  return false;
}

double bias_of(const ScoredInstance& inst, bool use_bias, std::size_t h, std::size_t t,
               std::size_t r) {
  return (use_bias && inst.bias) ? bias_lookup(h, t, r, *inst.bias) : 0.0;
}

bool entities_disjoint(const ScoredInstance& inst, const std::vector<std::size_t>& ent) {
  for (std::size_t a = 0; a < ent.size(); ++a) {
    if (ent[a] == 0) continue;
    for (std::size_t b = a + 1; b < ent.size(); ++b) {
      if (ent[b] == 0) continue;
      const auto& x = inst.spans[a];
      const auto& y = inst.spans[b];
      if (!(x.end < y.start || y.end < x.start)) return false;
    }
  }
  return true;
}

bool relations_ok(const ScoredInstance& inst, const BoundConstraints& bound,
                  const std::vector<std::size_t>& ent, const std::vector<std::size_t>& rel) {
  for (std::size_t r = 0; r < rel.size(); ++r) {
    if (rel[r] == 0) continue;
    const std::size_t h = ent[inst.relations[r].head];
    const std::size_t t = ent[inst.relations[r].tail];
    if (bound.consistency() && (h == 0 || t == 0)) return false;
    if (!bound.whitelisted(h, t, rel[r])) return false;
  }
  return true;
}

// Every entity labeling permitted by the non-overlap flag.
std::vector<std::vector<std::size_t>> entity_labelings(const ScoredInstance& inst,
                                                       const BoundConstraints& bound) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> ent(inst.spans.size(), 0);
  do {
    if (!bound.non_overlap() || entities_disjoint(inst, ent)) out.push_back(ent);
  } while (next_labeling(ent, inst.types.num_entity_types()));
  return out;
}

double entity_score(const ScoredInstance& inst, const std::vector<std::size_t>& ent) {
  double s = 0.0;
  for (std::size_t i = 0; i < ent.size(); ++i) s += inst.spans[i].logits[ent[i]];
  return s;
}

double relation_score(const ScoredInstance& inst, bool use_bias,
                      const std::vector<std::size_t>& ent, const std::vector<std::size_t>& rel) {
  double s = 0.0;
  for (std::size_t r = 0; r < rel.size(); ++r) {
    const auto& c = inst.relations[r];
    s += c.logits[rel[r]] + bias_of(inst, use_bias, ent[c.head], ent[c.tail], rel[r]);
  }
  return s;
}

DecodedStructure build(const ScoredInstance& inst, bool use_bias,
                       const std::vector<std::size_t>& ent, const std::vector<std::size_t>& rel,
                       double objective) {
  DecodedStructure out;
  for (std::size_t i = 0; i < ent.size(); ++i) {
    if (ent[i] == 0) continue;
    const auto& sp = inst.spans[i];
    out.entities.push_back({i, sp.start, sp.end, ent[i], sp.logits[ent[i]]});
  }
  for (std::size_t r = 0; r < rel.size(); ++r) {
    if (rel[r] == 0) continue;
    const auto& c = inst.relations[r];
    out.relations.push_back({r, c.head, c.tail, rel[r],
                             c.logits[rel[r]] +
                                 bias_of(inst, use_bias, ent[c.head], ent[c.tail], rel[r])});
  }
  out.objective = objective;
  return out;
}

DecodedStructure joint_oracle(const ScoredInstance& inst, const BoundConstraints& bound,
                              bool use_bias) {
  double best = kNone;
  std::vector<std::size_t> best_ent, best_rel;
  for (const auto& ent : entity_labelings(inst, bound)) {
    const double es = entity_score(inst, ent);
    std::vector<std::size_t> rel(inst.relations.size(), 0);
    do {
      if (!relations_ok(inst, bound, ent, rel)) continue;
      const double total = es + relation_score(inst, use_bias, ent, rel);
      if (total > best) {
        best = total;
        best_ent = ent;
        best_rel = rel;
      }
    } while (next_labeling(rel, inst.types.num_relation_types()));
  }
  return build(inst, use_bias, best_ent, best_rel, best);
}

DecodedStructure relation_first_oracle(const ScoredInstance& inst, const BoundConstraints& bound,
                                       bool use_bias) {
  const auto labelings = entity_labelings(inst, bound);

  // Stage 1: best relation labeling on raw logits that some entity labeling
  // can support.
  double best1 = kNone;
  std::vector<std::size_t> rel(inst.relations.size(), 0), best_rel;
  do {
    double s = 0.0;
    for (std::size_t r = 0; r < rel.size(); ++r) s += inst.relations[r].logits[rel[r]];
    if (!(s > best1)) continue;
    for (const auto& ent : labelings) {
      if (relations_ok(inst, bound, ent, rel)) {
        best1 = s;
        best_rel = rel;
        break;
      }
    }
  } while (next_labeling(rel, inst.types.num_relation_types()));

  // Stage 2: best entity labeling under the fixed relations.
  double best2 = kNone;
  std::vector<std::size_t> best_ent;
  for (const auto& ent : labelings) {
    if (!relations_ok(inst, bound, ent, best_rel)) continue;
    const double total = entity_score(inst, ent) + relation_score(inst, use_bias, ent, best_rel);
    if (total > best2) {
      best2 = total;
      best_ent = ent;
    }
  }
  return build(inst, use_bias, best_ent, best_rel, best2);
}

DecodedStructure entity_first_oracle(const ScoredInstance& inst, const BoundConstraints& bound,
                                     bool use_bias, std::size_t max_intervals) {
  std::vector<std::size_t> ent(inst.spans.size(), 0);
  std::vector<std::size_t> cand_span;
  std::vector<std::size_t> cand_type;
  std::vector<Interval> intervals;
  for (std::size_t i = 0; i < inst.spans.size(); ++i) {
    const auto& lg = inst.spans[i].logits;
    std::size_t c = 0;
    for (std::size_t k = 1; k < lg.size(); ++k) {
      if (lg[k] > lg[c]) c = k;
    }
    if (c == 0) continue;
    cand_span.push_back(i);
    cand_type.push_back(c);
    intervals.push_back({inst.spans[i].start, inst.spans[i].end, lg[c]});
  }
  if (bound.non_overlap()) {
    for (std::size_t k : brute_force_intervals(intervals, max_intervals).chosen) {
      ent[cand_span[k]] = cand_type[k];
    }
  } else {
    for (std::size_t k = 0; k < cand_span.size(); ++k) ent[cand_span[k]] = cand_type[k];
  }

  std::vector<std::size_t> rel(inst.relations.size(), 0);
  for (std::size_t r = 0; r < rel.size(); ++r) {
    const auto& c = inst.relations[r];
    const std::size_t h = ent[c.head];
    const std::size_t t = ent[c.tail];
    if (bound.consistency() && (h == 0 || t == 0)) continue;
    double best = kNone;
    for (std::size_t rho = 0; rho < c.logits.size(); ++rho) {
      if (rho != 0 && !bound.whitelisted(h, t, rho)) continue;
      if (rho != 0 && bound.consistency() && (h == 0 || t == 0)) continue;
      const double v = c.logits[rho] + bias_of(inst, use_bias, h, t, rho);
      if (v > best) {
        best = v;
        rel[r] = rho;
      }
    }
  }
  return build(inst, use_bias, ent, rel,
               entity_score(inst, ent) + relation_score(inst, use_bias, ent, rel));
}

}  // namespace

IntervalSelection brute_force_intervals(std::span<const Interval> intervals,
                                        std::size_t max_intervals) {
  const std::size_t n = intervals.size();
  if (n > max_intervals || n >= 63) {
    throw std::length_error("brute_force_intervals: " + std::to_string(n) +
                            " intervals exceed the cap of " + std::to_string(max_intervals));
  }
  IntervalSelection best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    bool ok = true;
    double total = 0.0;
    for (std::size_t a = 0; a < n && ok; ++a) {
      if (!(mask >> a & 1)) continue;
      total += intervals[a].weight;
      for (std::size_t b = a + 1; b < n; ++b) {
        if ((mask >> b & 1) &&
            !(intervals[a].end < intervals[b].start || intervals[b].end < intervals[a].start)) {
          ok = false;
          break;
        }
      }
    }
    if (ok && total > best.total) {
      best.total = total;
      best.chosen.clear();
      for (std::size_t a = 0; a < n; ++a) {
        if (mask >> a & 1) best.chosen.push_back(a);
      }
    }
  }
  return best;
}

DecodedStructure brute_force_oracle(const ScoredInstance& inst, const ConstraintSet& constraints,
                                    OracleMode mode, const DecodeOptions& options,
                                    const OracleCaps& caps) {
  inst.validate();
  const BoundConstraints bound(constraints, inst.types);
  const bool use_bias = options.use_bias && inst.bias.has_value();
  if (mode != OracleMode::kEntityFirst &&
      (inst.spans.size() > caps.max_spans || inst.relations.size() > caps.max_relations)) {
    throw std::length_error("brute_force_oracle: instance with " +
                            std::to_string(inst.spans.size()) + " spans and " +
                            std::to_string(inst.relations.size()) +
                            " relations exceeds the enumeration cap");
  }
  switch (mode) {
    case OracleMode::kJoint: return joint_oracle(inst, bound, use_bias);
    case OracleMode::kRelationFirst: return relation_first_oracle(inst, bound, use_bias);
    case OracleMode::kEntityFirst:
      return entity_first_oracle(inst, bound, use_bias, caps.max_intervals);
  }
  throw std::invalid_argument("unknown oracle mode");
}

}  // namespace spanrel
