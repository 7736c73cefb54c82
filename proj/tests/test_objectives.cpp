#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "spanrel/objectives.hpp"
#include "spanrel/synthetic.hpp"
#include "support.hpp"

using namespace spanrel;

namespace {

ModelParams small_params(std::uint64_t seed) {
  ModelShape shape;
  shape.dim = 8;
  shape.heads = 2;
  shape.types = conll04_types();
  return random_params(shape, seed);
}

}  // namespace

TEST_SUITE("objectives") {

TEST_CASE("align_gold: no gold means all null") {
  const auto spans = enumerate_spans(4, 2);
  const std::vector<PairRef> pairs{{0, 2}, {2, 0}};
  const auto a = align_gold(spans, pairs, {}, 4);
  CHECK(std::all_of(a.entity_labels.begin(), a.entity_labels.end(), [](auto v) { return v == 0; }));
  CHECK(std::all_of(a.entity_keep.begin(), a.entity_keep.end(), [](auto v) { return v == 0; }));
  CHECK(std::all_of(a.relation_keep.begin(), a.relation_keep.end(), [](auto v) { return v == 0; }));
}

TEST_CASE("align_gold: exact boundary match") {
  const auto spans = enumerate_spans(5, 2);
  GoldAnnotation gold;
  gold.entities = {{0, 1, 1}, {3, 3, 2}};
  gold.relations = {{0, 1, 3, 3, 1}};
  std::vector<PairRef> pairs;
  for (std::size_t h = 0; h < spans.size(); ++h) {
    for (std::size_t t = 0; t < spans.size(); ++t) pairs.push_back({h, t});
  }
  const auto a = align_gold(spans, pairs, gold, 5);
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].valid && spans[i].start == 0 && spans[i].end == 1) {
      CHECK(a.entity_labels[i] == 1);
      CHECK(a.entity_keep[i] == 1);
    }
    if (a.entity_labels[i] != 0) ++labeled;
  }
  CHECK(labeled == 2);
  std::size_t rel_hits = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (a.relation_labels[i] == 1) {
      ++rel_hits;
      CHECK(spans[pairs[i].head].start == 0);
      CHECK(spans[pairs[i].tail].start == 3);
    }
  }
  CHECK(rel_hits == 1);

  GoldAnnotation outside;
  outside.entities = {{4, 5, 1}};
  CHECK_THROWS_AS(align_gold(spans, {}, outside, 5), std::out_of_range);
}

TEST_CASE("ranking_loss: spec values") {
  const MaskVector l10{1, 0};
  CHECK(ranking_loss(Vector{5, 0}, Mask(l10), 1.0) == 0.0);
  CHECK(ranking_loss(Vector{0, 0}, Mask(l10), 1.0) == 1.0);
  const MaskVector l100{1, 0, 0};
  CHECK(ranking_loss(Vector{0, 2, 1}, Mask(l100), 0.5) == doctest::Approx(4.0));
  const MaskVector all{1, 1};
  CHECK(ranking_loss(Vector{0, 3}, Mask(all), 1.0) == 0.0);
}

TEST_CASE("ranking_loss: zero iff every positive clears every negative by the margin") {
  Rng rng(30);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng.index(8);
    Vector f(n);
    MaskVector labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = static_cast<double>(rng.index(7)) * 0.5;  // coarse grid: boundary cases happen
      labels[i] = rng.uniform() < 0.5;
    }
    const double alpha = static_cast<double>(rng.index(3)) * 0.5;
    const double loss = ranking_loss(f, Mask(labels), alpha);
    double min_pos = INFINITY, max_neg = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i]) {
        min_pos = std::min(min_pos, f[i]);
      } else {
        max_neg = std::max(max_neg, f[i]);
      }
    }
    CHECK(loss >= 0.0);
    CHECK((loss == 0.0) == (min_pos >= max_neg + alpha));
    Vector shifted = f;
    for (double& v : shifted) v += 3.25;
    CHECK(ranking_loss(shifted, Mask(labels), alpha) == doctest::Approx(loss));
  }
}

TEST_CASE("classification_loss: spec values") {
  const std::vector<std::size_t> zero{0};
  CHECK(classification_loss(Matrix(1, 4), zero) == doctest::Approx(std::log(4.0)));
  CHECK(classification_loss(Matrix::from_rows({{1000, 0, 0}}), zero) < 1e-12);
  CHECK(classification_loss(Matrix(0, 3), std::vector<std::size_t>{}) == 0.0);
  const std::vector<std::size_t> bad{3};
  CHECK_THROWS_AS(classification_loss(Matrix(1, 3), bad), std::out_of_range);
}

TEST_CASE("classification_loss decreases as the gold logit rises") {
  Rng rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    Matrix l = test::random_matrix(1, 5, rng, 3.0);
    const std::vector<std::size_t> label{rng.index(5)};
    const double before = classification_loss(l, label);
    CHECK(before >= 0.0);
    l(0, label[0]) += 0.5;
    CHECK(classification_loss(l, label) < before);
  }
}

TEST_CASE("finite differences") {
  const Vector x{0.3, -1.2, 2.0};
  const Vector g = finite_difference_gradient([](std::span<const double>) { return 7.0; }, x);
  for (double v : g) CHECK(v == 0.0);

  // Classification loss gradient is softmax - onehot.
  const std::size_t gold = 1;
  auto nll = [&](std::span<const double> p) {
    return classification_loss(Matrix(1, p.size(), Vector(p.begin(), p.end())),
                               std::vector<std::size_t>{gold});
  };
  const Vector grad = finite_difference_gradient(nll, x);
  const Vector sm = softmax(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(grad[i] - (sm[i] - (i == gold ? 1.0 : 0.0))) < 1e-4);
  }

  // Hinge slopes: positive 0 at 0.0, negatives at 0.2 and -5; only the first
  // negative is active with alpha 1.
  const MaskVector labels{1, 0, 0};
  auto rank = [&](std::span<const double> p) { return ranking_loss(p, Mask(labels), 1.0); };
  const Vector rg = finite_difference_gradient(rank, Vector{0.0, 0.2, -5.0});
  CHECK(rg[0] == doctest::Approx(-1.0));
  CHECK(rg[1] == doctest::Approx(1.0));
  CHECK(rg[2] == doctest::Approx(0.0));

  CHECK_THROWS_AS(finite_difference_gradient([](std::span<const double>) { return NAN; }, x),
                  std::domain_error);
}

TEST_CASE("total_loss is the sum of its terms") {
  const ModelParams params = small_params(5);
  const std::vector<std::string> tokens{"John", "Smith", "works", "for", "Acme", "in", "Boston"};
  GoldAnnotation gold;
  gold.entities = {{0, 1, 1}, {4, 4, 2}, {6, 6, 3}};
  gold.relations = {{0, 1, 4, 4, 1}, {4, 4, 6, 6, 3}};
  ForwardConfig cfg;
  cfg.max_span_width = 3;
  cfg.k_span = 12;  // large enough to keep the gold spans in play
  const LossBreakdown b = total_loss(tokens, params, gold, cfg, 1.0);
  CHECK(b.total == sum_terms(b));
  CHECK(b.total == b.filter_entity + b.filter_relation + b.class_entity + b.class_relation);
  CHECK(b.filter_entity >= 0.0);
  CHECK(b.class_entity > 0.0);
  CHECK(std::isfinite(b.total));
}

TEST_CASE("total_loss matches an independent recomputation") {
  const ModelParams params = small_params(6);
  const std::vector<std::string> tokens{"Mary", "lives", "in", "Paris", "."};
  GoldAnnotation gold;
  gold.entities = {{0, 0, 1}, {3, 3, 3}};
  gold.relations = {{0, 0, 3, 3, 2}};
  ForwardConfig cfg;
  cfg.max_span_width = 2;
  const double alpha = 0.75;
  const LossBreakdown b = total_loss(tokens, params, gold, cfg, alpha);

  const ForwardResult fwd = forward(tokens, params, cfg);
  auto gold_type = [&](std::size_t s, std::size_t e) -> std::size_t {
    for (const auto& g : gold.entities) {
      if (g.start == s && g.end == e) return g.type;
    }
    return 0;
  };
  // Span ranking term, by direct pair enumeration.
  const auto& scores = fwd.span_filter.filtered.ranking_scores;
  double rank_ent = 0.0;
  for (std::size_t p = 0; p < fwd.spans.size(); ++p) {
    if (!fwd.spans[p].valid || gold_type(fwd.spans[p].start, fwd.spans[p].end) == 0) continue;
    for (std::size_t n = 0; n < fwd.spans.size(); ++n) {
      if (fwd.spans[n].valid && gold_type(fwd.spans[n].start, fwd.spans[n].end) != 0) continue;
      rank_ent += std::max(0.0, scores[n] - scores[p] + alpha);
    }
  }
  CHECK(b.filter_entity == doctest::Approx(rank_ent).epsilon(1e-12));

  // Entity NLL over the kept spans.
  double nll = 0.0;
  const auto& kept = fwd.span_filter.filtered.kept_indices;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& sp = fwd.spans[kept[i]];
    const Vector p = softmax(fwd.entity_logits.row(i));
    nll -= std::log(p[gold_type(sp.start, sp.end)]);
  }
  CHECK(b.class_entity == doctest::Approx(nll / static_cast<double>(kept.size())).epsilon(1e-9));

  // Relation terms.
  double rank_rel = 0.0, nll_rel = 0.0;
  if (fwd.relation_filter) {
    auto rel_type = [&](std::size_t flat) -> std::size_t {
      const auto& pr = fwd.pairs[flat];
      if (!pr.valid) return 0;
      const auto& h = fwd.spans[kept[pr.head]];
      const auto& t = fwd.spans[kept[pr.tail]];
      for (const auto& g : gold.relations) {
        if (g.head_start == h.start && g.head_end == h.end && g.tail_start == t.start &&
            g.tail_end == t.end) {
          return g.type;
        }
      }
      return 0;
    };
    const auto& rs = fwd.relation_filter->filtered.ranking_scores;
    for (std::size_t p = 0; p < rs.size(); ++p) {
      if (rel_type(p) == 0) continue;
      for (std::size_t n = 0; n < rs.size(); ++n) {
        if (rel_type(n) == 0) rank_rel += std::max(0.0, rs[n] - rs[p] + alpha);
      }
    }
    const auto& rk = fwd.relation_filter->filtered.kept_indices;
    for (std::size_t i = 0; i < rk.size(); ++i) {
      nll_rel -= std::log(softmax(fwd.relation_logits.row(i))[rel_type(rk[i])]);
    }
    if (!rk.empty()) nll_rel /= static_cast<double>(rk.size());
  }
  CHECK(b.filter_relation == doctest::Approx(rank_rel).epsilon(1e-12));
  CHECK(b.class_relation == doctest::Approx(nll_rel).epsilon(1e-9));
  CHECK(b.total == doctest::Approx(rank_ent + nll / kept.size() + rank_rel + nll_rel).epsilon(1e-9));
}

}  // TEST_SUITE
