#pragma once

// Token embeddings, span and relation candidates, their representations and
// classification heads, and the type-affinity bias table.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spanrel/numerics.hpp"

namespace spanrel {

inline constexpr const char* kNonEntity = "non-entity";
inline constexpr const char* kNoRelation = "no-relation";

// Entity and relation label sets. Index 0 of each is the null label.
class TypeInventory {
 public:
  TypeInventory() = default;
  // Names exclude the null labels, which are prepended.
  TypeInventory(std::vector<std::string> entity_names, std::vector<std::string> relation_names);
  // Names already carry the null label at index 0.
  static TypeInventory from_full_lists(std::vector<std::string> entity_types,
                                       std::vector<std::string> relation_types);

  std::size_t num_entity_types() const { return entity_types_.size(); }
  std::size_t num_relation_types() const { return relation_types_.size(); }
  const std::vector<std::string>& entity_types() const { return entity_types_; }
  const std::vector<std::string>& relation_types() const { return relation_types_; }
  const std::string& entity_name(std::size_t i) const { return entity_types_.at(i); }
  const std::string& relation_name(std::size_t i) const { return relation_types_.at(i); }

  std::optional<std::size_t> entity_index(std::string_view name) const;
  std::optional<std::size_t> relation_index(std::string_view name) const;

  friend bool operator==(const TypeInventory&, const TypeInventory&) = default;

 private:
  void validate() const;

  std::vector<std::string> entity_types_{kNonEntity};
  std::vector<std::string> relation_types_{kNoRelation};
};

struct TokenEmbeddings {
  std::vector<std::string> tokens;
  Matrix vectors;  // L x D

  std::size_t length() const { return tokens.size(); }
};

// Deterministic stand-in for a contextual encoder: every token string seeds
// its own generator (FNV-1a of the token mixed with `seed`) which emits `dim`
// values uniform in [-1, 1]. Equal tokens get equal rows.
TokenEmbeddings encode_tokens(std::span<const std::string> tokens, std::size_t dim,
                              std::uint64_t seed);

struct SpanCandidate {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  bool valid = true;

  std::size_t width() const { return end - start + 1; }
  friend bool operator==(const SpanCandidate&, const SpanCandidate&) = default;
};

// All L*M (start, width) slots in start-major order. Slot (i, i+w) is invalid
// when i + w >= length.
std::vector<SpanCandidate> enumerate_spans(std::size_t length, std::size_t max_width);

// Row for span (i, j) is w_ent^T (h_i ++ h_j); invalid spans get a zero row.
Matrix span_representations(const TokenEmbeddings& h, std::span<const SpanCandidate> spans,
                            const Matrix& w_ent);

// Raw entity-type logits; column 0 is non-entity.
Matrix classify_spans(const Matrix& span_reprs, const FeedForwardParams& head);

// Ordered (head, tail) pair over K kept spans. Flat index is head * K + tail.
struct RelationPair {
  std::size_t head = 0;
  std::size_t tail = 0;
  bool valid = true;

  friend bool operator==(const RelationPair&, const RelationPair&) = default;
};

inline std::size_t pair_index(std::size_t head, std::size_t tail, std::size_t k) {
  return head * k + tail;
}
inline std::pair<std::size_t, std::size_t> pair_from_index(std::size_t flat, std::size_t k) {
  return {flat / k, flat % k};
}

struct RelationCandidates {
  Matrix reprs;                     // K^2 x D
  std::vector<RelationPair> pairs;  // K^2, diagonal marked invalid
};

RelationCandidates relation_representations(const Matrix& span_reprs, const Matrix& w_rel);

// Raw relation-type logits; column 0 is no-relation.
Matrix classify_relations(const Matrix& relation_reprs, const FeedForwardParams& head);

// b(h, t, r) = phi_htr[h][t][r] + phi_hr[h][r] + phi_tr[t][r] + phi_ht[h][t].
struct BiasTable {
  std::size_t num_entity_types = 0;
  std::size_t num_relation_types = 0;
  Vector phi_htr;  // E * E * R, index (h * E + t) * R + r
  Matrix phi_hr;   // E x R
  Matrix phi_tr;   // E x R
  Matrix phi_ht;   // E x E

  static BiasTable zeros(std::size_t entity_types, std::size_t relation_types);

  double& htr(std::size_t h, std::size_t t, std::size_t r) {
    return phi_htr[(h * num_entity_types + t) * num_relation_types + r];
  }
  double htr(std::size_t h, std::size_t t, std::size_t r) const {
    return phi_htr[(h * num_entity_types + t) * num_relation_types + r];
  }

  void validate() const;
  friend bool operator==(const BiasTable&, const BiasTable&) = default;
};

double bias_lookup(std::size_t head_type, std::size_t tail_type, std::size_t relation_type,
                   const BiasTable& table);

// Adds b(head_types[k], tail_types[k], r) to every cell of row k.
Matrix apply_bias(const Matrix& relation_logits, std::span<const std::size_t> head_types,
                  std::span<const std::size_t> tail_types, const BiasTable& table);

// softmax((logits + g) / temperature) with g drawn i.i.d. from Gumbel(0, 1).
Vector gumbel_softmax_sample(std::span<const double> logits, double temperature, Rng& rng);

// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

}  // namespace spanrel
