#include "spanrel/filter_refine.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spanrel {

Vector ranking_scores(const Matrix& z, const FeedForwardParams& filter,
                      std::optional<Mask> valid) {
  if (z.rows() == 0) throw ShapeError("ranking_scores: no candidates");
  if (filter.output_dim() != 1) throw ShapeError("ranking_scores: filter FFN must output width 1");
  if (valid && valid->size() != z.rows()) throw ShapeError("ranking_scores: mask length mismatch");
  const Matrix out = feed_forward(z, filter);
  Vector scores(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    scores[i] = (valid && !(*valid)[i]) ? kMaskSentinel : out(i, 0);
  }
  return scores;
}

FilterResult top_k_select(const Matrix& z, std::span<const double> scores, std::size_t k) {
  if (scores.size() != z.rows()) throw ShapeError("top_k_select: one score per row required");
  if (k == 0) throw std::invalid_argument("top_k_select: k must be at least 1");

  std::vector<std::size_t> order;
  order.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!is_masked(scores[i])) order.push_back(i);
  }
  const std::size_t keep = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  FilterResult out;
  out.representations = z.gather_rows(order);
  out.kept_indices = std::move(order);
  out.ranking_scores.assign(scores.begin(), scores.end());
  return out;
}

ReadResult read(const Matrix& z_f, const Matrix& tokens, const AttentionParams& params) {
  if (tokens.rows() == 0) throw ShapeError("read: empty token sequence");
  auto mha = multi_head_attention(z_f, tokens, params);
  return {add(z_f, mha.output), std::move(mha.attn)};
}

Matrix process(const Matrix& z_f, const RefineParams& params) {
  if (z_f.rows() == 0) throw ShapeError("process: no candidates");
  Matrix z = add(z_f, multi_head_attention(z_f, z_f, params.process).output);
  return add(z, feed_forward(z, params.ffn));
}

FilterRefineResult filter_and_refine(const Matrix& z, const Matrix& tokens, std::size_t k,
                                     const FilterRefineParams& params,
                                     std::optional<Mask> valid,
                                     std::size_t depth) {
  FilterRefineResult result;
  result.filtered = top_k_select(z, ranking_scores(z, params.filter, valid), k);
  if (result.filtered.kept_indices.empty()) return result;
  for (std::size_t pass = 0; pass < depth; ++pass) {
    auto r = read(result.filtered.representations, tokens, params.refine.read);
    result.read_attention = std::move(r.attention);
    result.filtered.representations = process(r.representations, params.refine);
  }
  return result;
}

}  // namespace spanrel
