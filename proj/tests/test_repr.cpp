#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "spanrel/repr.hpp"
#include "support.hpp"

using namespace spanrel;
using spanrel::test::max_abs_diff;

namespace {

Matrix stacked_identities(std::size_t d) {
  Matrix w(2 * d, d);
  for (std::size_t i = 0; i < d; ++i) {
    w(i, i) = 1.0;
    w(d + i, i) = 1.0;
  }
  return w;
}

}  // namespace

TEST_SUITE("repr") {

TEST_CASE("type inventory puts the null labels first") {
  const TypeInventory t({"PER", "ORG"}, {"WORKS"});
  CHECK(t.entity_types() == std::vector<std::string>{kNonEntity, "PER", "ORG"});
  CHECK(t.relation_types() == std::vector<std::string>{kNoRelation, "WORKS"});
  CHECK(t.entity_index("ORG") == 2u);
  CHECK(!t.entity_index("LOC").has_value());
  CHECK_THROWS(TypeInventory({"PER", "PER"}, {}));
  CHECK_THROWS(TypeInventory::from_full_lists({"PER"}, {kNoRelation}));
}

TEST_CASE("encode_tokens: equal tokens give equal rows") {
  const std::vector<std::string> toks{"a", "a"};
  const auto h = encode_tokens(toks, 8, 0);
  CHECK(std::equal(h.vectors.row(0).begin(), h.vectors.row(0).end(), h.vectors.row(1).begin()));
}

TEST_CASE("encode_tokens: deterministic, bounded, token-specific") {
  const std::vector<std::string> toks{"a", "b"};
  const auto x = encode_tokens(toks, 8, 3);
  const auto y = encode_tokens(toks, 8, 3);
  CHECK(x.vectors == y.vectors);
  CHECK(!std::equal(x.vectors.row(0).begin(), x.vectors.row(0).end(), x.vectors.row(1).begin()));
  for (double v : x.vectors.data()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  CHECK(!(encode_tokens(toks, 8, 4).vectors == x.vectors));
  CHECK_THROWS(encode_tokens(std::vector<std::string>{}, 8, 0));
}

TEST_CASE("enumerate_spans: hand-checked cases") {
  auto valid = [](const std::vector<SpanCandidate>& s) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& c : s) {
      if (c.valid) out.emplace_back(c.start, c.end);
    }
    return out;
  };
  const auto one = enumerate_spans(1, 1);
  CHECK(one.size() == 1);
  CHECK(valid(one) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}});

  const auto three = enumerate_spans(3, 2);
  CHECK(three.size() == 6);
  CHECK(valid(three) ==
        std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}});

  const auto two = enumerate_spans(2, 5);
  CHECK(two.size() == 10);
  CHECK(valid(two).size() == 3);
}

TEST_CASE("enumerate_spans: valid count and bounds for all small L, M") {
  for (std::size_t l = 1; l <= 15; ++l) {
    for (std::size_t m = 1; m <= 14; ++m) {
      const auto spans = enumerate_spans(l, m);
      REQUIRE(spans.size() == l * m);
      std::size_t expected = 0;
      for (std::size_t i = 0; i < l; ++i) expected += std::min(m, l - i);
      std::size_t count = 0;
      for (std::size_t s = 0; s < spans.size(); ++s) {
        // start-major slot order
        CHECK(spans[s].start == s / m);
        if (spans[s].valid) {
          ++count;
          CHECK(spans[s].end < l);
          CHECK(spans[s].width() <= m);
        }
      }
      CHECK(count == expected);
    }
  }
}

TEST_CASE("span_representations: stacked identities add the boundary embeddings") {
  const std::vector<std::string> toks{"x", "y", "z"};
  const auto h = encode_tokens(toks, 4, 1);
  const auto spans = enumerate_spans(3, 2);
  const Matrix z = span_representations(h, spans, stacked_identities(4));
  for (std::size_t s = 0; s < spans.size(); ++s) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (!spans[s].valid) {
        CHECK(z(s, c) == 0.0);
      } else if (spans[s].start == spans[s].end) {
        CHECK(z(s, c) == doctest::Approx(2.0 * h.vectors(spans[s].start, c)));
      } else {
        CHECK(z(s, c) ==
              doctest::Approx(h.vectors(spans[s].start, c) + h.vectors(spans[s].end, c)));
      }
    }
  }
}

TEST_CASE("span_representations match a concat-then-project loop") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t l = 1 + rng.index(8), m = 1 + rng.index(4), d = 1 + rng.index(6);
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < l; ++i) toks.push_back("t" + std::to_string(rng.index(5)));
    const auto h = encode_tokens(toks, d, rep);
    const Matrix w = test::random_matrix(2 * d, d, rng);
    const auto spans = enumerate_spans(l, m);
    const Matrix z = span_representations(h, spans, w);
    for (std::size_t s = 0; s < spans.size(); ++s) {
      Matrix cat(1, 2 * d);
      if (spans[s].valid) {
        for (std::size_t c = 0; c < d; ++c) {
          cat(0, c) = h.vectors(spans[s].start, c);
          cat(0, d + c) = h.vectors(spans[s].end, c);
        }
      }
      const Matrix ref = test::naive_matmul(cat, w);
      for (std::size_t c = 0; c < d; ++c) CHECK(std::abs(z(s, c) - ref(0, c)) < 1e-9);
    }
  }
  const std::vector<std::string> toks{"a"};
  const std::vector<SpanCandidate> bad{{0, 3, true}};
  CHECK_THROWS_AS(span_representations(encode_tokens(toks, 2, 0), bad, stacked_identities(2)),
                  std::out_of_range);
}

TEST_CASE("classification heads") {
  FeedForwardParams head = test::zero_ffn(4, 6, 3);
  head.b2 = {0.25, -1.0, 2.0};
  Rng rng(12);
  const Matrix z = test::random_matrix(5, 4, rng);
  const Matrix logits = classify_spans(z, head);
  CHECK(logits.rows() == 5);
  CHECK(logits.cols() == 3);
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::equal(logits.row(i).begin(), logits.row(i).end(), head.b2.begin()));

  const FeedForwardParams rnd = test::random_ffn(4, 6, 5, rng);
  const Matrix one = test::random_matrix(1, 4, rng);
  CHECK(max_abs_diff(classify_spans(one, rnd), test::naive_ffn(one, rnd)) < 1e-12);
  const Matrix rel = classify_relations(one, rnd);
  CHECK(rel.cols() == 5);
  CHECK(max_abs_diff(rel, test::naive_ffn(one, rnd)) < 1e-12);
  for (double v : classify_spans(z, rnd).data()) CHECK(std::isfinite(v));
  CHECK_THROWS(classify_spans(test::random_matrix(2, 3, rng), rnd));
}

TEST_CASE("relation_representations: pairs and masking") {
  Rng rng(13);
  const auto k1 = relation_representations(test::random_matrix(1, 3, rng), stacked_identities(3));
  REQUIRE(k1.pairs.size() == 1);
  CHECK(!k1.pairs[0].valid);

  const Matrix s = test::random_matrix(2, 3, rng);
  const auto k2 = relation_representations(s, stacked_identities(3));
  REQUIRE(k2.pairs.size() == 4);
  std::vector<std::pair<std::size_t, std::size_t>> valid;
  for (const auto& p : k2.pairs) {
    if (p.valid) valid.emplace_back(p.head, p.tail);
  }
  CHECK(valid == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 0}});
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      const std::size_t f = pair_index(a, b, 2);
      CHECK(k2.pairs[f].head == a);
      CHECK(k2.pairs[f].tail == b);
      for (std::size_t c = 0; c < 3; ++c) CHECK(k2.reprs(f, c) == doctest::Approx(s(a, c) + s(b, c)));
    }
  }
}

TEST_CASE("pair index round-trips") {
  for (std::size_t k = 1; k <= 12; ++k) {
    for (std::size_t f = 0; f < k * k; ++f) {
      const auto [h, t] = pair_from_index(f, k);
      CHECK(pair_index(h, t, k) == f);
    }
  }
}

TEST_CASE("bias_lookup") {
  BiasTable b = BiasTable::zeros(3, 4);
  CHECK(bias_lookup(1, 2, 3, b) == 0.0);
  b.phi_hr(1, 3) = 1.0;
  CHECK(bias_lookup(1, 2, 3, b) == 1.0);
  CHECK(bias_lookup(2, 1, 3, b) == 0.0);
  CHECK_THROWS_AS(bias_lookup(3, 0, 0, b), std::out_of_range);
  CHECK_THROWS_AS(bias_lookup(0, 0, 4, b), std::out_of_range);

  Rng rng(14);
  for (double& v : b.phi_htr) v = rng.uniform(-1, 1);
  for (Matrix* m : {&b.phi_hr, &b.phi_tr, &b.phi_ht}) {
    for (double& v : m->data()) v = rng.uniform(-1, 1);
  }
  for (std::size_t h = 0; h < 3; ++h) {
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t r = 0; r < 4; ++r) {
        const double expected =
            b.phi_htr[(h * 3 + t) * 4 + r] + b.phi_hr(h, r) + b.phi_tr(t, r) + b.phi_ht(h, t);
        CHECK(bias_lookup(h, t, r, b) == doctest::Approx(expected).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("apply_bias") {
  Rng rng(15);
  const Matrix logits = test::random_matrix(3, 4, rng);
  const std::vector<std::size_t> heads{0, 1, 2}, tails{1, 2, 0};
  BiasTable b = BiasTable::zeros(3, 4);
  CHECK(apply_bias(logits, heads, tails, b) == logits);

  b.htr(1, 2, 3) = 10.0;
  const Matrix raised = apply_bias(logits, heads, tails, b);
  CHECK(raised(1, 3) == logits(1, 3) + 10.0);
  CHECK(raised(0, 3) == logits(0, 3));

  // A forbidden cell can never win, whatever the raw logits.
  BiasTable forbid = BiasTable::zeros(3, 4);
  forbid.htr(2, 0, 1) = kMaskSentinel;
  for (int rep = 0; rep < 200; ++rep) {
    Matrix l = test::random_matrix(3, 4, rng, 5.0);
    l(2, 1) = 1e6;
    const Matrix out = apply_bias(l, heads, tails, forbid);
    CHECK(argmax(out.row(2)) != 1u);
  }
  const std::vector<std::size_t> short_heads{0};
  CHECK_THROWS(apply_bias(logits, short_heads, tails, b));
}

TEST_CASE("apply_bias keeps the argmax of rows with an all-zero bias") {
  Rng rng(16);
  BiasTable b = BiasTable::zeros(3, 4);
  for (double& v : b.phi_htr) v = rng.uniform(-3, 3);
  for (std::size_t r = 0; r < 4; ++r) b.htr(1, 1, r) = 0.0;  // zero row for (1, 1)
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix l = test::random_matrix(1, 4, rng);
    const std::vector<std::size_t> h{1}, t{1};
    CHECK(argmax(apply_bias(l, h, t, b).row(0)) == argmax(l.row(0)));
  }
}

TEST_CASE("gumbel_softmax_sample") {
  Rng rng(17);
  const Vector logits{0.3, -1.2, 2.0, 0.0};
  for (int rep = 0; rep < 100; ++rep) {
    const Vector p = gumbel_softmax_sample(logits, 0.7, rng);
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
  Rng a(5), b(5);
  CHECK(gumbel_softmax_sample(logits, 1.0, a) == gumbel_softmax_sample(logits, 1.0, b));
  CHECK_THROWS(gumbel_softmax_sample(logits, 0.0, a));
  CHECK_THROWS(gumbel_softmax_sample(logits, -1.0, a));

  Rng c(18);
  int confident = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    if (gumbel_softmax_sample(Vector{10, 0, 0}, 0.01, c)[0] > 0.999) ++confident;
  }
  CHECK(confident >= 999);
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(argmax(Vector{1, 3, 3, 2}) == 1u);
  CHECK(argmax(Vector{0, 0, 0}) == 0u);
}

}  // TEST_SUITE
