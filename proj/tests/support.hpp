#pragma once

// Helpers shared by the test binaries: random tensors and naive loop-based
// reference kernels that deliberately avoid the library's implementations.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spanrel/numerics.hpp"

namespace spanrel::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

inline Vector random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

inline Matrix naive_ffn(const Matrix& x, const FeedForwardParams& p) {
  Matrix h = naive_matmul(x, p.w1);
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) = std::max(0.0, h(i, j) + p.b1[j]);
  }
  Matrix o = naive_matmul(h, p.w2);
  for (std::size_t i = 0; i < o.rows(); ++i) {
    for (std::size_t j = 0; j < o.cols(); ++j) o(i, j) += p.b2[j];
  }
  return o;
}

inline FeedForwardParams random_ffn(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
  return {random_matrix(in, hidden, rng), random_vector(hidden, rng), random_matrix(hidden, out, rng),
          random_vector(out, rng)};
}

inline FeedForwardParams zero_ffn(std::size_t in, std::size_t hidden, std::size_t out) {
  return {Matrix(in, hidden), Vector(hidden, 0.0), Matrix(hidden, out), Vector(out, 0.0)};
}

inline AttentionParams random_attention(std::size_t dim, std::size_t heads, Rng& rng) {
  AttentionParams a;
  a.heads = heads;
  a.head_dim = dim / heads;
  a.wq = random_matrix(dim, dim, rng);
  a.wk = random_matrix(dim, dim, rng);
  a.wv = random_matrix(dim, dim, rng);
  a.wo = random_matrix(dim, dim, rng);
  return a;
}

// Per-head loops: project, score, normalize, mix, then output-project the
// concatenation.
inline Matrix naive_attention(const Matrix& q_in, const Matrix& kv_in, const AttentionParams& p,
                              std::vector<Matrix>* attn = nullptr) {
  const std::size_t d = p.model_dim();
  const std::size_t hd = p.head_dim;
  Matrix q = naive_matmul(q_in, p.wq), k = naive_matmul(kv_in, p.wk), v = naive_matmul(kv_in, p.wv);
  Matrix concat(q_in.rows(), d);
  if (attn) attn->clear();
  for (std::size_t h = 0; h < p.heads; ++h) {
    Matrix a(q_in.rows(), kv_in.rows());
    for (std::size_t i = 0; i < q_in.rows(); ++i) {
      std::vector<double> s(kv_in.rows());
      double mx = -1e300;
      for (std::size_t j = 0; j < kv_in.rows(); ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < hd; ++c) dot += q(i, h * hd + c) * k(j, h * hd + c);
        s[j] = dot / std::sqrt(static_cast<double>(hd));
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (double& x : s) z += (x = std::exp(x - mx));
      for (std::size_t j = 0; j < s.size(); ++j) a(i, j) = s[j] / z;
      for (std::size_t c = 0; c < hd; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) acc += a(i, j) * v(j, h * hd + c);
        concat(i, h * hd + c) = acc;
      }
    }
    if (attn) attn->push_back(a);
  }
  return naive_matmul(concat, p.wo);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace spanrel::test
