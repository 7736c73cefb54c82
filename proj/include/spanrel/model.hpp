#pragma once

// Learned parameters and the end-to-end forward pass:
// tokens -> spans -> filter/refine -> entity logits -> pairs -> filter/refine
// -> relation logits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spanrel/filter_refine.hpp"
#include "spanrel/numerics.hpp"
#include "spanrel/repr.hpp"

namespace spanrel {

struct ModelParams {
  std::size_t dim = 0;
  std::size_t heads = 1;
  TypeInventory types;
  Matrix w_ent;  // 2D x D
  Matrix w_rel;  // 2D x D
  FeedForwardParams entity_head;    // D -> |E|
  FeedForwardParams relation_head;  // D -> |R|
  FilterRefineParams span_layer;
  FilterRefineParams relation_layer;
  BiasTable bias;

  // Throws ShapeError naming the first inconsistent tensor.
  void validate() const;
};

struct ModelShape {
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t hidden = 0;  // FFN hidden width; 0 means 2 * dim
  TypeInventory types;
};

// Uniform Glorot-style initialization from a seeded Rng. The bias table gets
// small random entries.
ModelParams random_params(const ModelShape& shape, std::uint64_t seed);

ModelParams load_params(const std::filesystem::path& path);
void save_params(const ModelParams& params, const std::filesystem::path& path);

struct ForwardConfig {
  std::size_t max_span_width = 12;
  std::optional<std::size_t> k_span;  // default min(valid spans, max(8, L))
  std::optional<std::size_t> k_rel;   // default K_span
  std::size_t depth = 1;
  std::uint64_t seed = 0;  // toy encoder seed
};

struct ForwardResult {
  TokenEmbeddings tokens;
  std::vector<SpanCandidate> spans;  // all L*M slots
  FilterRefineResult span_filter;
  Matrix entity_logits;  // K_span x |E|
  std::vector<RelationPair> pairs;  // K_span^2, indices into kept spans
  std::optional<FilterRefineResult> relation_filter;  // absent when K_span^2 has no valid pair
  Matrix relation_logits;  // K_rel x |R|

  std::size_t k_span() const { return span_filter.filtered.kept_indices.size(); }
  std::size_t k_rel() const {
    return relation_filter ? relation_filter->filtered.kept_indices.size() : 0;
  }
};

std::size_t default_k_span(std::size_t length, std::size_t valid_spans);

ForwardResult forward(const std::vector<std::string>& tokens, const ModelParams& params,
                      const ForwardConfig& config);

}  // namespace spanrel
