#include "spanrel/decode.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>

#include "spanrel/errors.hpp"

namespace spanrel {

namespace {

constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

double bias_term(const ScoredInstance& inst, bool use_bias, std::size_t h, std::size_t t,
                 std::size_t r) {
  return (use_bias && inst.bias) ? bias_lookup(h, t, r, *inst.bias) : 0.0;
}

// Descending by value, ties toward the lower index.
std::vector<std::size_t> label_order(std::span<const double> logits) {
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  return order;
}

double top_margin(std::span<const double> logits) {
  if (logits.size() < 2) return 0.0;
  double first = kInfeasible, second = kInfeasible;
  for (double v : logits) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return first - second;
}

// Branching order over candidates: most confident first.
std::vector<std::size_t> margin_order(std::size_t n,
                                      const std::function<std::span<const double>(std::size_t)>& logits) {
  std::vector<double> margin(n);
  for (std::size_t i = 0; i < n; ++i) margin[i] = top_margin(logits(i));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return margin[a] > margin[b]; });
  return order;
}

std::vector<std::uint8_t> overlap_matrix(const ScoredInstance& inst, bool enforce) {
  const std::size_t n = inst.spans.size();
  std::vector<std::uint8_t> m(n * n, 0);
  if (!enforce) return m;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && spans_overlap(inst.spans[a].start, inst.spans[a].end, inst.spans[b].start,
                                  inst.spans[b].end)) {
        m[a * n + b] = 1;
      }
    }
  }
  return m;
}

// Maximize sum_s ent[s][label_s] + sum_r table_r[label_head][label_tail]
// over span labelings where no two overlapping spans are both non-null.
// Table entries may be kInfeasible.
struct SpanLabelProblem {
  std::size_t num_types = 0;
  const ScoredInstance* inst = nullptr;
  std::vector<std::uint8_t> overlap;
  struct Rel {
    std::size_t head = 0, tail = 0;
    std::vector<double> table;  // E * E, [head type * E + tail type]
    std::vector<double> row_max, col_max;
    double all_max = kInfeasible;
  };
  std::vector<Rel> rels;

  void finalize() {
    const std::size_t e = num_types;
    for (auto& r : rels) {
      r.row_max.assign(e, kInfeasible);
      r.col_max.assign(e, kInfeasible);
      for (std::size_t h = 0; h < e; ++h) {
        for (std::size_t t = 0; t < e; ++t) {
          const double v = r.table[h * e + t];
          r.row_max[h] = std::max(r.row_max[h], v);
          r.col_max[t] = std::max(r.col_max[t], v);
          r.all_max = std::max(r.all_max, v);
        }
      }
    }
  }
};

struct SpanLabelSolution {
  std::vector<std::size_t> labels;
  double value = kInfeasible;
};

class SpanLabelSearch {
 public:
  SpanLabelSearch(const SpanLabelProblem& p, std::size_t budget) : p_(p), budget_(budget) {
    const auto& spans = p.inst->spans;
    n_ = spans.size();
    order_ = margin_order(n_, [&](std::size_t i) { return std::span<const double>(spans[i].logits); });
    // Relation endpoints first: the relation terms of the bound only tighten
    // once both ends are fixed, and spans outside every relation are cheap to
    // settle afterwards.
    std::vector<std::size_t> degree(n_, 0);
    for (const auto& r : p.rels) {
      ++degree[r.head];
      ++degree[r.tail];
    }
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });
    for (const auto& s : spans) {
      labels_order_.push_back(label_order(s.logits));
      best_label_value_.push_back(*std::max_element(s.logits.begin(), s.logits.end()));
    }
    label_.assign(n_, kUnassigned);
    blocked_.assign(n_, 0);
  }

  SpanLabelSolution run() {
    dfs(0, 0.0);
    return best_;
  }

 private:
  static constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);

  double bound(double assigned_sum) const {
    double ub = assigned_sum;
    for (std::size_t s = 0; s < n_; ++s) {
      if (label_[s] != kUnassigned) continue;
      ub += blocked_[s] ? p_.inst->spans[s].logits[0] : best_label_value_[s];
    }
    const std::size_t e = p_.num_types;
    for (const auto& r : p_.rels) {
      const bool h_fixed = label_[r.head] != kUnassigned || blocked_[r.head];
      const bool t_fixed = label_[r.tail] != kUnassigned || blocked_[r.tail];
      const std::size_t h = label_[r.head] != kUnassigned ? label_[r.head] : 0;
      const std::size_t t = label_[r.tail] != kUnassigned ? label_[r.tail] : 0;
      if (h_fixed && t_fixed) {
        ub += r.table[h * e + t];
      } else if (h_fixed) {
        ub += r.row_max[h];
      } else if (t_fixed) {
        ub += r.col_max[t];
      } else {
        ub += r.all_max;
      }
    }
    return ub;
  }

  void dfs(std::size_t depth, double assigned_sum) {
    if (++nodes_ > budget_) {
      throw BudgetExceeded("exact search exceeded its budget of " + std::to_string(budget_) +
                           " nodes");
    }
    const double ub = bound(assigned_sum);
    if (!(ub > best_.value)) return;
    if (depth == n_) {
      best_.value = ub;
      best_.labels = label_;
      return;
    }
    const std::size_t s = order_[depth];
    const auto& logits = p_.inst->spans[s].logits;
    for (std::size_t label : labels_order_[s]) {
      if (label != 0 && blocked_[s]) continue;
      label_[s] = label;
      if (label != 0) set_blocks(s, +1);
      dfs(depth + 1, assigned_sum + logits[label]);
      if (label != 0) set_blocks(s, -1);
    }
    label_[s] = kUnassigned;
  }

  void set_blocks(std::size_t s, int delta) {
    for (std::size_t t = 0; t < n_; ++t) {
      if (p_.overlap[s * n_ + t]) blocked_[t] += delta;
    }
  }

  const SpanLabelProblem& p_;
  std::size_t budget_;
  std::size_t n_ = 0;
  std::size_t nodes_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> labels_order_;
  std::vector<double> best_label_value_;
  std::vector<std::size_t> label_;
  std::vector<int> blocked_;
  SpanLabelSolution best_;
};

DecodedStructure assemble(const ScoredInstance& inst, std::span<const std::size_t> entity_labels,
                          std::span<const std::size_t> relation_labels, bool use_bias) {
  DecodedStructure out;
  for (std::size_t s = 0; s < inst.spans.size(); ++s) {
    if (entity_labels[s] == 0) continue;
    const auto& sp = inst.spans[s];
    out.entities.push_back({s, sp.start, sp.end, entity_labels[s], sp.logits[entity_labels[s]]});
  }
  for (std::size_t r = 0; r < inst.relations.size(); ++r) {
    const std::size_t rho = relation_labels[r];
    if (rho == 0) continue;
    const auto& rel = inst.relations[r];
    const double score = rel.logits[rho] + bias_term(inst, use_bias, entity_labels[rel.head],
                                                     entity_labels[rel.tail], rho);
    out.relations.push_back({r, rel.head, rel.tail, rho, score});
  }
  out.objective = structure_objective(out, inst, use_bias);
  return out;
}

// Best admissible relation label between endpoint types (h, t):
// argmax of logit + bias, ties toward the lower index.
std::pair<std::size_t, double> best_relation_label(const ScoredInstance& inst,
                                                   const BoundConstraints& bound,
                                                   std::size_t relation, std::size_t h,
                                                   std::size_t t, bool use_bias) {
  const auto& logits = inst.relations[relation].logits;
  std::size_t best = 0;
  double best_v = kInfeasible;
  for (std::size_t rho = 0; rho < logits.size(); ++rho) {
    if (!bound.admissible(h, t, rho)) continue;
    const double v = logits[rho] + bias_term(inst, use_bias, h, t, rho);
    if (v > best_v) {
      best_v = v;
      best = rho;
    }
  }
  return {best, best_v};
}

// Satisfiability of the entity-typing problem induced by a set of non-null
// relation labels: every endpoint span needs a type such that each chosen
// relation is admissible, and overlapping endpoints cannot both be non-null.
struct TypingSolution {
  std::vector<std::size_t> span_labels;
  std::vector<std::size_t> relation_labels;
};

// Exact maximizer of span scores plus relation scores under the constraints.
// Given both endpoint types, each relation independently takes its best
// admissible label, so the search runs over span labels only and relations
// enter through per-type-pair value tables.
TypingSolution best_typing(const ScoredInstance& inst, const BoundConstraints& bound,
                           std::vector<std::uint8_t> overlap, bool use_bias, std::size_t budget) {
  const std::size_t e = inst.types.num_entity_types();
  SpanLabelProblem problem;
  problem.num_types = e;
  problem.inst = &inst;
  problem.overlap = std::move(overlap);
  std::vector<std::vector<std::size_t>> arg(inst.relations.size());
  for (std::size_t r = 0; r < inst.relations.size(); ++r) {
    SpanLabelProblem::Rel rel;
    rel.head = inst.relations[r].head;
    rel.tail = inst.relations[r].tail;
    rel.table.resize(e * e);
    arg[r].resize(e * e);
    for (std::size_t h = 0; h < e; ++h) {
      for (std::size_t t = 0; t < e; ++t) {
        auto [rho, v] = best_relation_label(inst, bound, r, h, t, use_bias);
        rel.table[h * e + t] = v;
        arg[r][h * e + t] = rho;
      }
    }
    problem.rels.push_back(std::move(rel));
  }
  problem.finalize();

  TypingSolution out;
  out.span_labels = SpanLabelSearch(problem, budget).run().labels;
  out.relation_labels.assign(inst.relations.size(), 0);
  for (std::size_t r = 0; r < inst.relations.size(); ++r) {
    const auto& rel = inst.relations[r];
    out.relation_labels[r] = arg[r][out.span_labels[rel.head] * e + out.span_labels[rel.tail]];
  }
  return out;
}

void require_valid(const ScoredInstance& inst) {
  try {
    inst.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("invalid scored instance: ") + e.what());
  }
}

}  // namespace

void ScoredInstance::validate() const {
  const std::size_t e = types.num_entity_types();
  const std::size_t r = types.num_relation_types();
  if (length == 0) throw std::invalid_argument("sentence length must be positive");
  if (!tokens.empty() && tokens.size() != length) {
    throw std::invalid_argument("token count does not match length");
  }
  auto finite_logits = [](const Vector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start > s.end || s.end >= length) {
      throw std::invalid_argument("span " + std::to_string(i) + " outside sentence");
    }
    if (s.logits.size() != e) {
      throw std::invalid_argument("span " + std::to_string(i) + " has " +
                                  std::to_string(s.logits.size()) + " logits, expected " +
                                  std::to_string(e));
    }
    if (!finite_logits(s.logits)) {
      throw std::invalid_argument("span " + std::to_string(i) + " has non-finite logits");
    }
  }
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const auto& rel = relations[i];
    if (rel.head >= spans.size() || rel.tail >= spans.size()) {
      throw std::invalid_argument("relation " + std::to_string(i) + " references a missing span");
    }
    if (rel.head == rel.tail) {
      throw std::invalid_argument("relation " + std::to_string(i) + " pairs a span with itself");
    }
    if (rel.logits.size() != r) {
      throw std::invalid_argument("relation " + std::to_string(i) + " has " +
                                  std::to_string(rel.logits.size()) + " logits, expected " +
                                  std::to_string(r));
    }
    if (!finite_logits(rel.logits)) {
      throw std::invalid_argument("relation " + std::to_string(i) + " has non-finite logits");
    }
  }
  if (bias) {
    if (bias->num_entity_types != e || bias->num_relation_types != r) {
      throw std::invalid_argument("bias table does not match the type inventory");
    }
    bias->validate();
  }
}

bool DecodedStructure::same_labels(const DecodedStructure& other) const {
  auto ent_key = [](const DecodedEntity& e) { return std::tuple(e.span, e.start, e.end, e.type); };
  auto rel_key = [](const DecodedRelation& r) {
    return std::tuple(r.relation, r.head, r.tail, r.type);
  };
  return std::equal(entities.begin(), entities.end(), other.entities.begin(), other.entities.end(),
                    [&](const auto& a, const auto& b) { return ent_key(a) == ent_key(b); }) &&
         std::equal(relations.begin(), relations.end(), other.relations.begin(),
                    other.relations.end(),
                    [&](const auto& a, const auto& b) { return rel_key(a) == rel_key(b); });
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kUnconstrained: return "unconstrained";
    case Algorithm::kEntityFirst: return "entity-first";
    case Algorithm::kJoint: return "joint";
    case Algorithm::kRelationFirst: return "relation-first";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kUnconstrained, Algorithm::kEntityFirst, Algorithm::kJoint,
                      Algorithm::kRelationFirst}) {
    if (algorithm_name(a) == name) return a;
  }
  return std::nullopt;
}

IntervalSelection max_weight_nonoverlap(std::span<const Interval> intervals) {
  const std::size_t n = intervals.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(intervals[a].end, intervals[a].start) <
           std::tie(intervals[b].end, intervals[b].start);
  });
  std::vector<std::size_t> ends(n);
  for (std::size_t k = 0; k < n; ++k) ends[k] = intervals[order[k]].end;

  // best[k]: optimum over the first k sorted intervals.
  // pred[k]: how many sorted intervals end strictly before interval k starts.
  std::vector<double> best(n + 1, 0.0);
  std::vector<std::size_t> pred(n);
  std::vector<std::uint8_t> take(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& iv = intervals[order[k]];
    pred[k] = static_cast<std::size_t>(
        std::lower_bound(ends.begin(), ends.begin() + static_cast<std::ptrdiff_t>(k), iv.start) -
        ends.begin());
    const double with = iv.weight + best[pred[k]];
    if (with > best[k]) {
      best[k + 1] = with;
      take[k] = 1;
    } else {
      best[k + 1] = best[k];
    }
  }

  IntervalSelection out;
  for (std::size_t k = n; k > 0;) {
    if (take[k - 1]) {
      out.chosen.push_back(order[k - 1]);
      k = pred[k - 1];
    } else {
      --k;
    }
  }
  std::sort(out.chosen.begin(), out.chosen.end());
  for (std::size_t i : out.chosen) out.total += intervals[i].weight;
  return out;
}

std::vector<DecodedEntity> unconstrained_entities(const ScoredInstance& inst) {
  std::vector<DecodedEntity> out;
  for (std::size_t s = 0; s < inst.spans.size(); ++s) {
    const auto& sp = inst.spans[s];
    const std::size_t c = argmax(sp.logits);
    if (c != 0) out.push_back({s, sp.start, sp.end, c, sp.logits[c]});
  }
  return out;
}

std::vector<DecodedRelation> unconstrained_relations(const ScoredInstance& inst) {
  std::vector<DecodedRelation> out;
  for (std::size_t r = 0; r < inst.relations.size(); ++r) {
    const auto& rel = inst.relations[r];
    const std::size_t c = argmax(rel.logits);
    if (c != 0) out.push_back({r, rel.head, rel.tail, c, rel.logits[c]});
  }
  return out;
}

DecodedStructure unconstrained_decode(const ScoredInstance& inst) {
  require_valid(inst);
  DecodedStructure out;
  out.entities = unconstrained_entities(inst);
  out.relations = unconstrained_relations(inst);
  out.objective = structure_objective(out, inst, false);
  return out;
}

DecodedStructure entity_first_decode(const ScoredInstance& inst, const ConstraintSet& constraints,
                                     const DecodeOptions& options) {
  require_valid(inst);
  const BoundConstraints bound(constraints, inst.types);
  const bool use_bias = options.use_bias && inst.bias.has_value();

  // Argmax entities, then the best non-overlapping subset weighted by the
  // chosen-type logit.
  const auto candidates = unconstrained_entities(inst);
  std::vector<std::size_t> entity_labels(inst.spans.size(), 0);
  if (bound.non_overlap()) {
    std::vector<Interval> intervals;
    for (const auto& e : candidates) intervals.push_back({e.start, e.end, e.score});
    for (std::size_t i : max_weight_nonoverlap(intervals).chosen) {
      entity_labels[candidates[i].span] = candidates[i].type;
    }
  } else {
    for (const auto& e : candidates) entity_labels[e.span] = e.type;
  }

  // Relations are independent once entity types are fixed: argmax of
  // logit + bias, with inadmissible triples masked by the sentinel.
  std::vector<std::size_t> relation_labels(inst.relations.size(), 0);
  for (std::size_t r = 0; r < inst.relations.size(); ++r) {
    const auto& rel = inst.relations[r];
    const std::size_t h = entity_labels[rel.head];
    const std::size_t t = entity_labels[rel.tail];
    if (bound.consistency() && (h == 0 || t == 0)) continue;
    Vector scores(rel.logits.size());
    for (std::size_t rho = 0; rho < scores.size(); ++rho) {
      scores[rho] = rel.logits[rho] + bias_term(inst, use_bias, h, t, rho) +
                    (bound.admissible(h, t, rho) ? 0.0 : kMaskSentinel);
    }
    const std::size_t rho = argmax(scores);
    if (rho != 0 && !is_masked(scores[rho])) relation_labels[r] = rho;
  }
  return assemble(inst, entity_labels, relation_labels, use_bias);
}

DecodedStructure joint_decode(const ScoredInstance& inst, const ConstraintSet& constraints,
                              const DecodeOptions& options) {
  require_valid(inst);
  const BoundConstraints bound(constraints, inst.types);
  const bool use_bias = options.use_bias && inst.bias.has_value();
  const TypingSolution sol =
      best_typing(inst, bound, overlap_matrix(inst, bound.non_overlap()), use_bias, options.budget);
  return assemble(inst, sol.span_labels, sol.relation_labels, use_bias);
}

DecodedStructure relation_first_decode(const ScoredInstance& inst,
                                       const ConstraintSet& constraints,
                                       const DecodeOptions& options) {
  require_valid(inst);
  const BoundConstraints bound(constraints, inst.types);
  const bool use_bias = options.use_bias && inst.bias.has_value();
  const std::size_t e = inst.types.num_entity_types();
  const auto overlap = overlap_matrix(inst, bound.non_overlap());

  // Stage 1: relation labels on raw logits, restricted to labelings some
  // entity typing can support. That is the joint problem with every span
  // score zeroed and no bias.
  ScoredInstance relations_only = inst;
  relations_only.bias.reset();
  for (auto& sp : relations_only.spans) std::fill(sp.logits.begin(), sp.logits.end(), 0.0);
  const std::vector<std::size_t> relation_labels =
      best_typing(relations_only, bound, overlap, false, options.budget).relation_labels;

  // Stage 2: entity labels with the relation labels fixed.
  SpanLabelProblem problem;
  problem.num_types = e;
  problem.inst = &inst;
  problem.overlap = overlap;
  for (std::size_t r = 0; r < inst.relations.size(); ++r) {
    const std::size_t rho = relation_labels[r];
    SpanLabelProblem::Rel rel;
    rel.head = inst.relations[r].head;
    rel.tail = inst.relations[r].tail;
    rel.table.resize(e * e);
    for (std::size_t h = 0; h < e; ++h) {
      for (std::size_t t = 0; t < e; ++t) {
        rel.table[h * e + t] = bound.admissible(h, t, rho)
                                   ? inst.relations[r].logits[rho] + bias_term(inst, use_bias, h, t, rho)
                                   : kInfeasible;
      }
    }
    problem.rels.push_back(std::move(rel));
  }
  problem.finalize();
  const SpanLabelSolution sol = SpanLabelSearch(problem, options.budget).run();
  if (sol.labels.size() != inst.spans.size()) {
    throw std::logic_error("relation-first: stage 2 found no typing for a satisfiable stage 1");
  }
  return assemble(inst, sol.labels, relation_labels, use_bias);
}

DecodedStructure decode(Algorithm algorithm, const ScoredInstance& inst,
                        const ConstraintSet& constraints, const DecodeOptions& options) {
  switch (algorithm) {
    case Algorithm::kUnconstrained: return unconstrained_decode(inst);
    case Algorithm::kEntityFirst: return entity_first_decode(inst, constraints, options);
    case Algorithm::kJoint: return joint_decode(inst, constraints, options);
    case Algorithm::kRelationFirst: return relation_first_decode(inst, constraints, options);
  }
  throw std::invalid_argument("unknown algorithm");
}

double structure_objective(const DecodedStructure& s, const ScoredInstance& inst, bool use_bias) {
  std::vector<std::size_t> ent(inst.spans.size(), 0);
  std::vector<std::size_t> rel(inst.relations.size(), 0);
  for (const auto& e : s.entities) ent.at(e.span) = e.type;
  for (const auto& r : s.relations) rel.at(r.relation) = r.type;
  double total = 0.0;
  for (std::size_t i = 0; i < inst.spans.size(); ++i) total += inst.spans[i].logits[ent[i]];
  for (std::size_t i = 0; i < inst.relations.size(); ++i) {
    const auto& r = inst.relations[i];
    total += r.logits[rel[i]] + bias_term(inst, use_bias, ent[r.head], ent[r.tail], rel[i]);
  }
  return total;
}

std::vector<Violation> check_constraints(const DecodedStructure& s,
                                         const ConstraintSet& constraints,
                                         const ScoredInstance& inst) {
  const BoundConstraints bound(constraints, inst.types);
  std::vector<Violation> out;
  const std::size_t n = inst.spans.size();

  std::vector<std::size_t> ent_type(n, 0);
  std::vector<std::uint8_t> seen_span(n, 0);
  for (const auto& e : s.entities) {
    if (e.span >= n) throw std::out_of_range("entity references missing span " + std::to_string(e.span));
    const auto& sp = inst.spans[e.span];
    if (sp.start != e.start || sp.end != e.end) {
      throw std::out_of_range("entity boundaries (" + std::to_string(e.start) + "," +
                              std::to_string(e.end) + ") do not match span " +
                              std::to_string(e.span));
    }
    if (e.type >= inst.types.num_entity_types()) throw std::out_of_range("entity type out of range");
    if (e.type == 0) {
      out.push_back({"unique-type", "span " + std::to_string(e.span) + " emitted with the null label"});
    }
    if (seen_span[e.span]++) {
      out.push_back({"unique-type", "span " + std::to_string(e.span) + " typed more than once"});
    }
    ent_type[e.span] = e.type;
  }

  if (bound.non_overlap()) {
    for (std::size_t a = 0; a < s.entities.size(); ++a) {
      for (std::size_t b = a + 1; b < s.entities.size(); ++b) {
        const auto& x = s.entities[a];
        const auto& y = s.entities[b];
        if (x.span != y.span && spans_overlap(x.start, x.end, y.start, y.end)) {
          out.push_back({"non-overlap", "entities (" + std::to_string(x.start) + "," +
                                            std::to_string(x.end) + ") and (" +
                                            std::to_string(y.start) + "," +
                                            std::to_string(y.end) + ") overlap"});
        }
      }
    }
  }

  std::vector<std::uint8_t> seen_rel(inst.relations.size(), 0);
  for (const auto& r : s.relations) {
    if (r.relation >= inst.relations.size()) {
      throw std::out_of_range("relation references missing candidate " + std::to_string(r.relation));
    }
    const auto& cand = inst.relations[r.relation];
    if (cand.head != r.head || cand.tail != r.tail) {
      throw std::out_of_range("relation " + std::to_string(r.relation) +
                              " arguments do not match its candidate");
    }
    if (r.type >= inst.types.num_relation_types()) throw std::out_of_range("relation type out of range");
    const std::string label = "relation " + std::to_string(r.relation);
    if (r.type == 0) out.push_back({"unique-type", label + " emitted with the null label"});
    if (seen_rel[r.relation]++) out.push_back({"unique-type", label + " typed more than once"});

    const std::size_t h = ent_type[r.head];
    const std::size_t t = ent_type[r.tail];
    if (bound.consistency() && (h == 0 || t == 0)) {
      out.push_back({"consistency", label + " has an argument that is not a decoded entity"});
      continue;
    }
    if (r.type != 0 && !bound.whitelisted(h, t, r.type)) {
      out.push_back({"whitelist", label + ": (" + inst.types.entity_name(h) + ", " +
                                      inst.types.entity_name(t) + ", " +
                                      inst.types.relation_name(r.type) + ") is not allowed"});
    }
  }
  return out;
}

}  // namespace spanrel
