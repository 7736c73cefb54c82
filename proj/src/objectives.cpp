#include "spanrel/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace spanrel {

namespace {

std::size_t match_entity(const SpanCandidate& sp, const GoldAnnotation& gold) {
  if (!sp.valid) return 0;
  for (const auto& g : gold.entities) {
    if (g.start == sp.start && g.end == sp.end) return g.type;
  }
  return 0;
}

}  // namespace

Alignment align_gold(std::span<const SpanCandidate> spans, std::span<const PairRef> pairs,
                     const GoldAnnotation& gold, std::size_t sentence_length) {
  auto check = [&](std::size_t s, std::size_t e, const char* what) {
    if (s > e || e >= sentence_length) {
      throw std::out_of_range(std::string("gold ") + what + " (" + std::to_string(s) + "," +
                              std::to_string(e) + ") outside sentence of length " +
                              std::to_string(sentence_length));
    }
  };
  for (const auto& g : gold.entities) check(g.start, g.end, "entity");
  for (const auto& r : gold.relations) {
    check(r.head_start, r.head_end, "relation head");
    check(r.tail_start, r.tail_end, "relation tail");
  }

  Alignment a;
  a.entity_labels.resize(spans.size());
  a.entity_keep.resize(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    a.entity_labels[i] = match_entity(spans[i], gold);
    a.entity_keep[i] = a.entity_labels[i] != 0;
  }

  a.relation_labels.resize(pairs.size());
  a.relation_keep.resize(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.head >= spans.size() || p.tail >= spans.size()) {
      throw std::out_of_range("align_gold: relation candidate references a missing span");
    }
    const auto& h = spans[p.head];
    const auto& t = spans[p.tail];
    if (!h.valid || !t.valid || p.head == p.tail) continue;
    for (const auto& g : gold.relations) {
      if (g.head_start == h.start && g.head_end == h.end && g.tail_start == t.start &&
          g.tail_end == t.end) {
        a.relation_labels[i] = g.type;
        a.relation_keep[i] = 1;
        break;
      }
    }
  }
  return a;
}

double ranking_loss(std::span<const double> scores, Mask labels, double alpha) {
  if (labels.size() != scores.size()) throw ShapeError("ranking_loss: one label per score required");
  if (alpha < 0.0) throw std::invalid_argument("ranking_loss: margin must be non-negative");
  double loss = 0.0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (!labels[p]) continue;
    for (std::size_t n = 0; n < scores.size(); ++n) {
      if (labels[n]) continue;
      loss += std::max(0.0, scores[n] - scores[p] + alpha);
    }
  }
  return loss;
}

double classification_loss(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("classification_loss: one label per row required");
  }
  if (logits.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (labels[i] >= logits.cols()) {
      throw std::out_of_range("classification_loss: label " + std::to_string(labels[i]) +
                              " out of range for " + std::to_string(logits.cols()) + " classes");
    }
    total += log_sum_exp(logits.row(i)) - logits(i, labels[i]);
  }
  return total / static_cast<double>(logits.rows());
}

LossBreakdown total_loss(const std::vector<std::string>& tokens, const ModelParams& params,
                         const GoldAnnotation& gold, const ForwardConfig& config, double alpha) {
  for (const auto& e : gold.entities) {
    if (e.type >= params.types.num_entity_types()) throw std::out_of_range("gold entity type");
  }
  for (const auto& r : gold.relations) {
    if (r.type >= params.types.num_relation_types()) throw std::out_of_range("gold relation type");
  }

  const ForwardResult fwd = forward(tokens, params, config);
  const auto& kept_spans = fwd.span_filter.filtered.kept_indices;

  // Span level: ranking over all L*M slots, classification over kept spans.
  const Alignment span_align = align_gold(fwd.spans, {}, gold, tokens.size());
  LossBreakdown out;
  out.filter_entity = ranking_loss(fwd.span_filter.filtered.ranking_scores, span_align.entity_keep, alpha);
  std::vector<std::size_t> entity_labels;
  for (std::size_t idx : kept_spans) entity_labels.push_back(span_align.entity_labels[idx]);
  out.class_entity = classification_loss(fwd.entity_logits, entity_labels);

  // Relation level: candidates are ordered pairs of kept spans.
  std::vector<SpanCandidate> kept;
  for (std::size_t idx : kept_spans) kept.push_back(fwd.spans[idx]);
  std::vector<PairRef> pairs;
  for (const auto& p : fwd.pairs) pairs.push_back({p.head, p.tail});
  const Alignment rel_align = align_gold(kept, pairs, gold, tokens.size());
  if (fwd.relation_filter) {
    out.filter_relation = ranking_loss(fwd.relation_filter->filtered.ranking_scores,
                                       rel_align.relation_keep, alpha);
    std::vector<std::size_t> rel_labels;
    for (std::size_t idx : fwd.relation_filter->filtered.kept_indices) {
      rel_labels.push_back(rel_align.relation_labels[idx]);
    }
    out.class_relation = classification_loss(fwd.relation_logits, rel_labels);
  }
  out.total = sum_terms(out);
  return out;
}

Vector finite_difference_gradient(const std::function<double(std::span<const double>)>& loss,
                                  std::span<const double> point, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_difference_gradient: epsilon must be > 0");
  Vector x(point.begin(), point.end());
  Vector grad(x.size());
  const double base = loss(x);
  if (!std::isfinite(base)) throw std::domain_error("finite_difference_gradient: non-finite loss");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + epsilon;
    const double up = loss(x);
    x[i] = saved - epsilon;
    const double down = loss(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("finite_difference_gradient: non-finite loss at coordinate " +
                              std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

}  // namespace spanrel
