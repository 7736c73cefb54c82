#include "spanrel/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spanrel {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str(rows_, cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ShapeError("ragged rows in Matrix::from_rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= rows_) throw ShapeError("gather_rows index out of range");
    auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("add: " + shape_str(a.rows(), a.cols()) + " vs " +
                     shape_str(b.rows(), b.cols()));
  }
  Matrix out = a;
  auto& d = out.data();
  const auto& e = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += e[i];
  return out;
}

Matrix linear(const Matrix& x, const Matrix& w, std::optional<std::span<const double>> bias) {
  if (x.cols() != w.rows()) {
    throw ShapeError("linear: input " + shape_str(x.rows(), x.cols()) + " vs weight " +
                     shape_str(w.rows(), w.cols()));
  }
  if (bias && bias->size() != w.cols()) {
    throw ShapeError("linear: bias length " + std::to_string(bias->size()) +
                     " vs output width " + std::to_string(w.cols()));
  }
  Matrix out(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    if (bias) std::copy(bias->begin(), bias->end(), dst.begin());
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double xv = x(i, k);
      if (xv == 0.0) continue;
      auto wr = w.row(k);
      for (std::size_t j = 0; j < wr.size(); ++j) dst[j] += xv * wr[j];
    }
  }
  return out;
}

Matrix relu(Matrix x) {
  for (double& v : x.data()) v = v > 0.0 ? v : 0.0;
  return x;
}

Vector softmax(std::span<const double> logits, std::optional<Mask> valid) {
  if (logits.empty()) throw ShapeError("softmax: empty input");
  if (valid && valid->size() != logits.size()) {
    throw ShapeError("softmax: mask length does not match logits");
  }
  auto is_valid = [&](std::size_t i) { return !valid || (*valid)[i]; };

  double max_v = kMaskSentinel;
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!is_valid(i)) continue;
    max_v = any ? std::max(max_v, logits[i]) : logits[i];
    any = true;
  }
  if (!any) throw std::invalid_argument("softmax: every position is masked");

  Vector out(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!is_valid(i)) continue;
    out[i] = std::exp(logits[i] - max_v);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw ShapeError("log_sum_exp: empty input");
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void AttentionParams::validate() const {
  const std::size_t d = model_dim();
  if (heads == 0 || head_dim == 0) throw ShapeError("attention: heads and head_dim must be positive");
  for (const Matrix* m : {&wq, &wk, &wv, &wo}) {
    if (m->rows() != d || m->cols() != d) {
      throw ShapeError("attention: projection is " + shape_str(m->rows(), m->cols()) +
                       ", expected " + shape_str(d, d));
    }
  }
}

AttentionOutput multi_head_attention(const Matrix& queries, const Matrix& keys_values,
                                     const AttentionParams& params) {
  params.validate();
  const std::size_t d = params.model_dim();
  if (keys_values.rows() == 0) throw ShapeError("attention: no keys");
  if (queries.cols() != d || keys_values.cols() != d) {
    throw ShapeError("attention: inputs must have width " + std::to_string(d));
  }

  const Matrix q = linear(queries, params.wq);
  const Matrix k = linear(keys_values, params.wk);
  const Matrix v = linear(keys_values, params.wv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.head_dim));
  const std::size_t nq = queries.rows();
  const std::size_t nk = keys_values.rows();

  AttentionOutput result;
  result.attn.reserve(params.heads);
  Matrix concat(nq, d);
  Vector scores(nk);
  for (std::size_t h = 0; h < params.heads; ++h) {
    const std::size_t off = h * params.head_dim;
    Matrix weights(nq, nk);
    for (std::size_t i = 0; i < nq; ++i) {
      for (std::size_t j = 0; j < nk; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < params.head_dim; ++c) dot += q(i, off + c) * k(j, off + c);
        scores[j] = dot * scale;
      }
      const Vector p = softmax(scores);
      std::copy(p.begin(), p.end(), weights.row(i).begin());
      for (std::size_t j = 0; j < nk; ++j) {
        for (std::size_t c = 0; c < params.head_dim; ++c) concat(i, off + c) += p[j] * v(j, off + c);
      }
    }
    result.attn.push_back(std::move(weights));
  }
  result.output = linear(concat, params.wo);
  return result;
}

void FeedForwardParams::validate() const {
  if (w1.cols() != b1.size() || w2.rows() != w1.cols() || w2.cols() != b2.size()) {
    throw ShapeError("feed_forward: inconsistent shapes w1 " + shape_str(w1.rows(), w1.cols()) +
                     ", b1 " + std::to_string(b1.size()) + ", w2 " +
                     shape_str(w2.rows(), w2.cols()) + ", b2 " + std::to_string(b2.size()));
  }
}

Matrix feed_forward(const Matrix& x, const FeedForwardParams& params) {
  params.validate();
  return linear(relu(linear(x, params.w1, params.b1)), params.w2, params.b2);
}

double Rng::gumbel() { return -std::log(-std::log(uniform_open())); }

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace spanrel
