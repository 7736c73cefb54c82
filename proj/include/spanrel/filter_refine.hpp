#pragma once

// Filter-and-refine layer: score every candidate, keep the top K, then let the
// survivors read the token sequence (cross-attention) and each other
// (self-attention + feed-forward). Used unchanged for spans and relations.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "spanrel/numerics.hpp"

namespace spanrel {

struct FilterResult {
  std::vector<std::size_t> kept_indices;  // strictly increasing original indices
  Matrix representations;                 // K x D, rows follow kept_indices
  Vector ranking_scores;                  // all N candidates
};

struct RefineParams {
  AttentionParams read;     // queries: candidates, keys/values: tokens
  AttentionParams process;  // self-attention among candidates
  FeedForwardParams ffn;    // D -> hidden -> D
};

struct FilterRefineParams {
  FeedForwardParams filter;  // D -> hidden -> 1
  RefineParams refine;
};

// FFN score per candidate; invalid candidates are forced to kMaskSentinel.
Vector ranking_scores(const Matrix& z, const FeedForwardParams& filter,
                      std::optional<Mask> valid = std::nullopt);

// Keeps the k highest-scoring candidates, ties toward the lower index. Masked
// scores are never selected, so fewer than k rows come back when fewer than k
// candidates are eligible. k larger than N is clamped.
FilterResult top_k_select(const Matrix& z, std::span<const double> scores, std::size_t k);

struct ReadResult {
  Matrix representations;
  std::vector<Matrix> attention;  // one K x L matrix per head
};

// z_f + MHA(z_f, tokens)
ReadResult read(const Matrix& z_f, const Matrix& tokens, const AttentionParams& params);

// z_f + MHA(z_f, z_f), then + FFN(.)
Matrix process(const Matrix& z_f, const RefineParams& params);

struct FilterRefineResult {
  FilterResult filtered;
  std::vector<Matrix> read_attention;  // from the last READ pass; empty when K == 0
};

// ranking_scores -> top_k_select -> (read -> process) x depth.
FilterRefineResult filter_and_refine(const Matrix& z, const Matrix& tokens, std::size_t k,
                                     const FilterRefineParams& params,
                                     std::optional<Mask> valid = std::nullopt,
                                     std::size_t depth = 1);

}  // namespace spanrel
