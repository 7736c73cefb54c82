#include "spanrel/repr.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace spanrel {

TypeInventory::TypeInventory(std::vector<std::string> entity_names,
                             std::vector<std::string> relation_names) {
  entity_types_.insert(entity_types_.end(), std::make_move_iterator(entity_names.begin()),
                       std::make_move_iterator(entity_names.end()));
  relation_types_.insert(relation_types_.end(), std::make_move_iterator(relation_names.begin()),
                         std::make_move_iterator(relation_names.end()));
  validate();
}

TypeInventory TypeInventory::from_full_lists(std::vector<std::string> entity_types,
                                             std::vector<std::string> relation_types) {
  TypeInventory inv;
  inv.entity_types_ = std::move(entity_types);
  inv.relation_types_ = std::move(relation_types);
  inv.validate();
  return inv;
}

void TypeInventory::validate() const {
  auto check = [](const std::vector<std::string>& names, const char* null_label,
                  const char* what) {
    if (names.empty() || names.front() != null_label) {
      throw std::invalid_argument(std::string(what) + " types must start with '" + null_label +
                                  "'");
    }
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (n.empty()) throw std::invalid_argument(std::string(what) + " type name is empty");
      if (!seen.insert(n).second) {
        throw std::invalid_argument(std::string("duplicate ") + what + " type '" + n + "'");
      }
    }
  };
  check(entity_types_, kNonEntity, "entity");
  check(relation_types_, kNoRelation, "relation");
}

std::optional<std::size_t> TypeInventory::entity_index(std::string_view name) const {
  auto it = std::find(entity_types_.begin(), entity_types_.end(), name);
  if (it == entity_types_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - entity_types_.begin());
}

std::optional<std::size_t> TypeInventory::relation_index(std::string_view name) const {
  auto it = std::find(relation_types_.begin(), relation_types_.end(), name);
  if (it == relation_types_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - relation_types_.begin());
}

TokenEmbeddings encode_tokens(std::span<const std::string> tokens, std::size_t dim,
                              std::uint64_t seed) {
  if (tokens.empty()) throw std::invalid_argument("encode_tokens: empty token list");
  if (dim == 0) throw ShapeError("encode_tokens: dimension must be positive");
  TokenEmbeddings out{{tokens.begin(), tokens.end()}, Matrix(tokens.size(), dim)};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Rng rng(mix64(fnv1a64(tokens[i]) ^ mix64(seed)));
    for (double& v : out.vectors.row(i)) v = rng.uniform(-1.0, 1.0);
  }
  return out;
}

std::vector<SpanCandidate> enumerate_spans(std::size_t length, std::size_t max_width) {
  std::vector<SpanCandidate> spans;
  spans.reserve(length * max_width);
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t w = 0; w < max_width; ++w) {
      spans.push_back({i, i + w, i + w < length});
    }
  }
  return spans;
}

Matrix span_representations(const TokenEmbeddings& h, std::span<const SpanCandidate> spans,
                            const Matrix& w_ent) {
  const std::size_t d = h.vectors.cols();
  if (w_ent.rows() != 2 * d) {
    throw ShapeError("span_representations: w_ent must have " + std::to_string(2 * d) + " rows");
  }
  Matrix concat(spans.size(), 2 * d);
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto& sp = spans[s];
    if (!sp.valid) continue;
    if (sp.start > sp.end || sp.end >= h.length()) {
      throw std::out_of_range("span_representations: span (" + std::to_string(sp.start) + "," +
                              std::to_string(sp.end) + ") outside sentence");
    }
    auto dst = concat.row(s);
    auto hs = h.vectors.row(sp.start);
    auto he = h.vectors.row(sp.end);
    std::copy(hs.begin(), hs.end(), dst.begin());
    std::copy(he.begin(), he.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return linear(concat, w_ent);
}

Matrix classify_spans(const Matrix& span_reprs, const FeedForwardParams& head) {
  return feed_forward(span_reprs, head);
}

RelationCandidates relation_representations(const Matrix& span_reprs, const Matrix& w_rel) {
  const std::size_t k = span_reprs.rows();
  const std::size_t d = span_reprs.cols();
  if (w_rel.rows() != 2 * d) {
    throw ShapeError("relation_representations: w_rel must have " + std::to_string(2 * d) +
                     " rows");
  }
  RelationCandidates out;
  out.pairs.reserve(k * k);
  Matrix concat(k * k, 2 * d);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      auto dst = concat.row(pair_index(a, b, k));
      auto ha = span_reprs.row(a);
      auto hb = span_reprs.row(b);
      std::copy(ha.begin(), ha.end(), dst.begin());
      std::copy(hb.begin(), hb.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
      out.pairs.push_back({a, b, a != b});
    }
  }
  out.reprs = linear(concat, w_rel);
  return out;
}

Matrix classify_relations(const Matrix& relation_reprs, const FeedForwardParams& head) {
  return feed_forward(relation_reprs, head);
}

BiasTable BiasTable::zeros(std::size_t entity_types, std::size_t relation_types) {
  return {entity_types,
          relation_types,
          Vector(entity_types * entity_types * relation_types, 0.0),
          Matrix(entity_types, relation_types),
          Matrix(entity_types, relation_types),
          Matrix(entity_types, entity_types)};
}

void BiasTable::validate() const {
  const std::size_t e = num_entity_types;
  const std::size_t r = num_relation_types;
  if (phi_htr.size() != e * e * r || phi_hr.rows() != e || phi_hr.cols() != r ||
      phi_tr.rows() != e || phi_tr.cols() != r || phi_ht.rows() != e || phi_ht.cols() != e) {
    throw ShapeError("bias table shapes do not match " + std::to_string(e) + " entity and " +
                     std::to_string(r) + " relation types");
  }
}

double bias_lookup(std::size_t head_type, std::size_t tail_type, std::size_t relation_type,
                   const BiasTable& table) {
  if (head_type >= table.num_entity_types || tail_type >= table.num_entity_types ||
      relation_type >= table.num_relation_types) {
    throw std::out_of_range("bias_lookup: type index out of range");
  }
  return table.htr(head_type, tail_type, relation_type) + table.phi_hr(head_type, relation_type) +
         table.phi_tr(tail_type, relation_type) + table.phi_ht(head_type, tail_type);
}

Matrix apply_bias(const Matrix& relation_logits, std::span<const std::size_t> head_types,
                  std::span<const std::size_t> tail_types, const BiasTable& table) {
  if (head_types.size() != relation_logits.rows() || tail_types.size() != relation_logits.rows()) {
    throw ShapeError("apply_bias: one head and tail type per relation row required");
  }
  if (relation_logits.cols() != table.num_relation_types) {
    throw ShapeError("apply_bias: logit width does not match the bias table");
  }
  Matrix out = relation_logits;
  for (std::size_t k = 0; k < out.rows(); ++k) {
    for (std::size_t r = 0; r < out.cols(); ++r) {
      out(k, r) += bias_lookup(head_types[k], tail_types[k], r, table);
    }
  }
  return out;
}

Vector gumbel_softmax_sample(std::span<const double> logits, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw std::invalid_argument("gumbel_softmax_sample: temperature must be > 0");
  Vector perturbed(logits.begin(), logits.end());
  for (double& v : perturbed) v = (v + rng.gumbel()) / temperature;
  return softmax(perturbed);
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw ShapeError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace spanrel
