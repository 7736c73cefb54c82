#pragma once

// Dense kernels shared by the representation, filtering and decoding layers.
// Everything here is a pure function over value types; there is no global
// state and no dependency beyond the standard library.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spanrel {

// Stand-in for -inf in masked logits. Subtracting two sentinels stays finite,
// so max-stabilized softmax never produces NaN.
inline constexpr double kMaskSentinel = -1e30;

// Anything at or below this is treated as masked.
inline constexpr double kMaskThreshold = -1e29;

inline bool is_masked(double x) { return x <= kMaskThreshold; }

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Vector = std::vector<double>;

// Per-position validity flags (nonzero = valid). A byte vector rather than
// std::vector<bool> so it can be viewed as a span.
using MaskVector = std::vector<std::uint8_t>;
using Mask = std::span<const std::uint8_t>;

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  // Rows picked by index, in the given order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix add(const Matrix& a, const Matrix& b);

// x * w (+ bias broadcast over rows).
Matrix linear(const Matrix& x, const Matrix& w,
              std::optional<std::span<const double>> bias = std::nullopt);

Matrix relu(Matrix x);

// Max-stabilized softmax. `valid[i] == false` forces output i to exactly 0.
Vector softmax(std::span<const double> logits,
               std::optional<Mask> valid = std::nullopt);

// Log-sum-exp, stabilized.
double log_sum_exp(std::span<const double> v);

// Projections are stored as D x D matrices; head h owns columns
// [h*head_dim, (h+1)*head_dim) of the query/key/value projections and the
// matching rows of the output projection.
struct AttentionParams {
  std::size_t heads = 1;
  std::size_t head_dim = 0;
  Matrix wq, wk, wv, wo;

  std::size_t model_dim() const { return heads * head_dim; }
  void validate() const;
};

struct AttentionOutput {
  Matrix output;              // Q x D
  std::vector<Matrix> attn;   // one Q x N matrix per head
};

// Scaled dot-product attention (scale 1/sqrt(head_dim)) per head,
// concatenated and projected by wo.
AttentionOutput multi_head_attention(const Matrix& queries, const Matrix& keys_values,
                                     const AttentionParams& params);

// linear -> ReLU -> linear.
struct FeedForwardParams {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;

  std::size_t input_dim() const { return w1.rows(); }
  std::size_t output_dim() const { return w2.cols(); }
  void validate() const;
};

Matrix feed_forward(const Matrix& x, const FeedForwardParams& params);

// Seeded generator built on std::mt19937_64, whose output sequence is fixed by
// the C++ standard. Real-valued draws are derived from the raw 64-bit words
// directly instead of through <random> distributions, whose algorithms are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // (0, 1), never hits either end.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). Modulo bias is irrelevant at the sizes used.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  // Standard Gumbel(0, 1).
  double gumbel();

 private:
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

// SplitMix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace spanrel
