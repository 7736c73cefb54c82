#include <doctest.h>

#include <cmath>

#include "spanrel/numerics.hpp"
#include "support.hpp"

using namespace spanrel;
using spanrel::test::max_abs_diff;

TEST_SUITE("numerics") {

TEST_CASE("matrix rejects data of the wrong length") {
  CHECK_THROWS_AS(Matrix(2, 2, Vector{1, 2, 3}), ShapeError);
  CHECK_NOTHROW(Matrix(2, 2, Vector{1, 2, 3, 4}));
}

TEST_CASE("linear: identity input reproduces the weights") {
  const Matrix w = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(linear(Matrix::identity(2), w) == w);
}

TEST_CASE("linear: row vector times matrix") {
  const Matrix w = Matrix::from_rows({{1, 2}, {3, 4}});
  const Vector b{0, 0};
  CHECK(linear(Matrix::from_rows({{1, 1}}), w, b) == Matrix::from_rows({{4, 6}}));
}

TEST_CASE("linear: zero input yields the bias in every row") {
  Rng rng(1);
  const Matrix w = test::random_matrix(4, 3, rng);
  const Vector b{0.5, -1.25, 2.0};
  const Matrix out = linear(Matrix(3, 4), w, b);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(out(i, j) == b[j]);
  }
}

TEST_CASE("linear: shape errors") {
  CHECK_THROWS_AS(linear(Matrix(2, 3), Matrix(2, 2)), ShapeError);
  const Vector b{1, 2, 3};
  CHECK_THROWS_AS(linear(Matrix(2, 2), Matrix(2, 2), b), ShapeError);
}

TEST_CASE("linear matches a loop-based product on random inputs") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix x = test::random_matrix(1 + rng.index(5), 1 + rng.index(6), rng);
    const Matrix w = test::random_matrix(x.cols(), 1 + rng.index(4), rng);
    CHECK(max_abs_diff(linear(x, w), test::naive_matmul(x, w)) < 1e-12);
  }
}

TEST_CASE("relu clamps negatives") {
  CHECK(relu(Matrix::from_rows({{-5, 0, 3}})) == Matrix::from_rows({{0, 0, 3}}));
}

TEST_CASE("softmax: uniform logits") {
  const Vector p = softmax(Vector{0, 0, 0});
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax: dominant logit") {
  const Vector p = softmax(Vector{1000, 0, 0});
  CHECK(std::abs(p[0] - 1.0) < 1e-6);
  CHECK(p[1] < 1e-6);
  CHECK(p[2] < 1e-6);
}

TEST_CASE("softmax: closed form for log-weights") {
  const Vector p = softmax(Vector{std::log(1.0), std::log(2.0), std::log(3.0)});
  CHECK(p[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(3.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("softmax: masking") {
  const MaskVector valid{1, 0, 1};
  const Vector p = softmax(Vector{1, 50, 1}, Mask(valid));
  CHECK(p[1] == 0.0);
  CHECK(p[0] == doctest::Approx(0.5));
  const MaskVector none{0, 0};
  CHECK_THROWS(softmax(Vector{1, 2}, Mask(none)));
  // Sentinel entries behave like masked ones without NaN.
  const Vector q = softmax(Vector{kMaskSentinel, 0.0, kMaskSentinel});
  CHECK(q[1] == 1.0);
  CHECK(q[0] == 0.0);
}

TEST_CASE("softmax properties on random vectors") {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const Vector v = test::random_vector(1 + rng.index(10), rng, 20.0);
    const Vector p = softmax(v);
    double sum = 0.0;
    for (double x : p) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
    Vector shifted = v;
    const double c = rng.uniform(-100, 100);
    for (double& x : shifted) x += c;
    const Vector ps = softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - ps[i]) < 1e-6);
  }
}

TEST_CASE("log_sum_exp is stable") {
  CHECK(log_sum_exp(Vector{1000, 1000}) == doctest::Approx(1000 + std::log(2.0)));
  CHECK(log_sum_exp(Vector{0, 0, 0, 0}) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("attention: zero value and output projections give a zero output") {
  Rng rng(4);
  AttentionParams p = test::random_attention(4, 2, rng);
  p.wv = Matrix(4, 4);
  p.wo = Matrix(4, 4);
  const auto out = multi_head_attention(test::random_matrix(3, 4, rng), test::random_matrix(5, 4, rng), p);
  CHECK(out.output == Matrix(3, 4));
}

TEST_CASE("attention: a single key gets all the weight") {
  Rng rng(5);
  const AttentionParams p = test::random_attention(6, 3, rng);
  const auto out = multi_head_attention(test::random_matrix(4, 6, rng), test::random_matrix(1, 6, rng), p);
  REQUIRE(out.attn.size() == 3);
  for (const auto& a : out.attn) {
    for (std::size_t i = 0; i < 4; ++i) CHECK(a(i, 0) == 1.0);
  }
}

TEST_CASE("attention matches the per-head loop reference") {
  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t heads = 1 + rng.index(3);
    const std::size_t dim = heads * (1 + rng.index(4));
    const AttentionParams p = test::random_attention(dim, heads, rng);
    const Matrix q = test::random_matrix(1 + rng.index(5), dim, rng);
    const Matrix kv = test::random_matrix(1 + rng.index(6), dim, rng);
    std::vector<Matrix> ref_attn;
    const Matrix ref = test::naive_attention(q, kv, p, &ref_attn);
    const auto out = multi_head_attention(q, kv, p);
    CHECK(out.output.rows() == q.rows());
    CHECK(out.output.cols() == dim);
    CHECK(max_abs_diff(out.output, ref) < 1e-10);
    REQUIRE(out.attn.size() == heads);
    for (std::size_t h = 0; h < heads; ++h) {
      CHECK(max_abs_diff(out.attn[h], ref_attn[h]) < 1e-12);
      for (std::size_t i = 0; i < q.rows(); ++i) {
        double s = 0.0;
        for (double v : out.attn[h].row(i)) s += v;
        CHECK(std::abs(s - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("attention: errors") {
  Rng rng(7);
  const AttentionParams p = test::random_attention(4, 2, rng);
  CHECK_THROWS(multi_head_attention(test::random_matrix(2, 4, rng), Matrix(0, 4), p));
  CHECK_THROWS(multi_head_attention(test::random_matrix(2, 3, rng), test::random_matrix(2, 4, rng), p));
  AttentionParams bad = p;
  bad.head_dim = 3;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("feed_forward: zero weights give the final bias") {
  FeedForwardParams p = test::zero_ffn(3, 5, 2);
  p.b2 = {1.5, -2.0};
  Rng rng(8);
  const Matrix out = feed_forward(test::random_matrix(4, 3, rng), p);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out(i, 0) == 1.5);
    CHECK(out(i, 1) == -2.0);
  }
}

TEST_CASE("feed_forward: ReLU clamps the hidden unit") {
  const FeedForwardParams p{Matrix::from_rows({{1}}), {0}, Matrix::from_rows({{1}}), {0}};
  CHECK(feed_forward(Matrix::from_rows({{-5}}), p)(0, 0) == 0.0);
  CHECK(feed_forward(Matrix::from_rows({{5}}), p)(0, 0) == 5.0);
}

TEST_CASE("feed_forward matches linear-relu-linear composed by hand") {
  Rng rng(9);
  const FeedForwardParams p = test::random_ffn(8, 8, 3, rng);
  const Matrix x = test::random_matrix(4, 8, rng);
  CHECK(max_abs_diff(feed_forward(x, p), test::naive_ffn(x, p)) < 1e-12);
  CHECK_THROWS_AS(feed_forward(test::random_matrix(4, 7, rng), p), ShapeError);
}

TEST_CASE("kernels are deterministic") {
  Rng rng(10);
  const AttentionParams p = test::random_attention(8, 2, rng);
  const Matrix q = test::random_matrix(5, 8, rng);
  const auto a = multi_head_attention(q, q, p);
  const auto b = multi_head_attention(q, q, p);
  CHECK(a.output == b.output);
}

TEST_CASE("rng: mt19937_64 reference stream") {
  // The standard fixes the 10000th output for the default seed.
  Rng rng(5489);
  for (int i = 0; i < 9999; ++i) rng.next_u64();
  CHECK(rng.next_u64() == 9981545732273789042ULL);
}

TEST_CASE("rng: seeded determinism and ranges") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    differs = differs || (x != c.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    const double g = a.gumbel();
    b.gumbel();
    CHECK(std::isfinite(g));
    CHECK(a.index(7) < 7);
    b.index(7);
  }
  CHECK(differs);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

}  // TEST_SUITE
