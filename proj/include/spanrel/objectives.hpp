#pragma once

// Forward evaluation of the training objectives and the gold alignment they
// need. Nothing here computes analytic gradients; finite differences are
// provided for verification.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spanrel/model.hpp"
#include "spanrel/numerics.hpp"
#include "spanrel/repr.hpp"

namespace spanrel {

struct GoldEntity {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  std::size_t type = 0;
};

struct GoldRelation {
  std::size_t head_start = 0, head_end = 0;
  std::size_t tail_start = 0, tail_end = 0;
  std::size_t type = 0;
};

struct GoldAnnotation {
  std::vector<GoldEntity> entities;
  std::vector<GoldRelation> relations;
};

// Relation candidate addressed by positions in the span candidate list.
struct PairRef {
  std::size_t head = 0;
  std::size_t tail = 0;
};

struct Alignment {
  std::vector<std::size_t> entity_labels;    // per span candidate
  std::vector<std::size_t> relation_labels;  // per relation candidate
  MaskVector entity_keep;                    // 1 iff the span matches a gold entity
  MaskVector relation_keep;                  // 1 iff the pair matches a gold relation
};

// Exact-boundary matching. Invalid span candidates never match. Throws
// std::out_of_range when a gold boundary lies outside the sentence.
Alignment align_gold(std::span<const SpanCandidate> spans, std::span<const PairRef> pairs,
                     const GoldAnnotation& gold, std::size_t sentence_length);

// sum over positives p and negatives n of max(0, f[n] - f[p] + alpha).
double ranking_loss(std::span<const double> scores, Mask labels, double alpha);

// Mean over rows of -log softmax(row)[label]; 0 for an empty batch.
double classification_loss(const Matrix& logits, std::span<const std::size_t> labels);

struct LossBreakdown {
  double filter_entity = 0.0;
  double filter_relation = 0.0;
  double class_entity = 0.0;
  double class_relation = 0.0;
  double total = 0.0;
};

inline double sum_terms(const LossBreakdown& b) {
  return b.filter_entity + b.filter_relation + b.class_entity + b.class_relation;
}

// Runs the forward pass and scores it against `gold`. Ranking losses cover
// every candidate at each level; classification losses cover only the
// candidates that survived filtering.
LossBreakdown total_loss(const std::vector<std::string>& tokens, const ModelParams& params,
                         const GoldAnnotation& gold, const ForwardConfig& config,
                         double alpha = 1.0);

// Central differences, one coordinate at a time.
Vector finite_difference_gradient(const std::function<double(std::span<const double>)>& loss,
                                  std::span<const double> point, double epsilon = 1e-5);

}  // namespace spanrel
