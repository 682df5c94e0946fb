#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aan/autodiff/tape.hpp"
#include "aan/rng.hpp"

namespace aan::ad {

enum class Mode { train, eval };

/// Contiguous run of rows [offset, offset + length) inside a stacked matrix.
struct Segment {
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Running statistics owned by a batch-norm layer.
struct BatchNormStats {
  explicit BatchNormStats(std::size_t features = 1)
      : running_mean(Shape{features}, 0.0), running_var(Shape{features}, 1.0) {}

  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.9;
  double eps = 1e-5;
};

inline constexpr double kPoolEpsilon = 1e-8;
inline constexpr double kLogClamp = 1e-12;

// --- linear algebra -------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
/// Elementwise (Hadamard) product of equal shapes.
Var mul(Var a, Var b);
/// x [m x n] + b [n] broadcast over rows.
Var add_bias(Var x, Var bias);
Var affine(Var x, Var weight, Var bias);
Var scale(Var x, double c);
/// Sum of all elements as a [1] scalar.
Var sum(Var x);

/// Rows of `table` selected by `ids`: [ids.size() x d].
Var embedding(Var table, std::span<const std::size_t> ids);

/// `x[r, cols[r]]` for every row r; result is [rows].
Var pick(Var x, std::span<const std::size_t> cols);
Var column(Var x, std::size_t col);

// --- convolution ----------------------------------------------------------

/// Same-length 1-D convolution with zero padding: output row j is the affine
/// map of the window centered on input row j. `filters` is [window*d x f],
/// slot k of the window occupies filter rows [k*d, (k+1)*d).
Var conv1d_seq(Var x, Var filters, Var bias, std::size_t window);

/// conv1d_seq applied independently to each segment of a stacked matrix.
/// Padding never crosses a segment boundary.
Var conv1d_segments(Var x, std::span<const Segment> segments, Var filters, Var bias,
                    std::size_t window);

// --- elementwise ----------------------------------------------------------

Var relu(Var x);
Var tanh_op(Var x);
/// min(x, c) elementwise.
Var clip_upper(Var x, double c);
Var softmax_rows(Var x);

// --- pooling --------------------------------------------------------------

/// Column-wise max; the first maximal row of each column gets the gradient.
Var max_pool_rows(Var x);
Var mean_rows(Var x);
Var max_pool_segments(Var x, std::span<const Segment> segments);
Var mean_pool_segments(Var x, std::span<const Segment> segments);

/// sum_i w_i x_i / (sum_i w_i + eps). Weights must be non-negative.
Var weighted_sum_rows(Var x, Var weights);

/// weighted_sum_rows per segment of rows of `x` (and entries of `weights`).
/// A segment whose weight total is below `fallback_below` is pooled with
/// uniform weights instead and sends no gradient to its weights.
Var weighted_sum_segments(Var x, Var weights, std::span<const Segment> segments,
                          double fallback_below = -1.0);

// --- training-time layers -------------------------------------------------

/// Identity forward; backward multiplies the upstream gradient by -rho.
Var grad_reverse(Var x, double rho);

/// Per-column standardization with learned scale/shift. Train mode uses the
/// batch statistics (B >= 2) and folds them into `stats`; eval mode uses the
/// running statistics.
Var batch_norm(Var x, Var gamma, Var beta, Mode mode, BatchNormStats& stats);

/// Inverted dropout: survivors are scaled by 1/(1-rate); eval is identity.
Var dropout(Var x, double rate, Mode mode, Rng& rng);

// --- losses ---------------------------------------------------------------

/// -sum y log(max(p, 1e-12)) summed over the batch. Rows of p must be
/// distributions; an all-zero row of y contributes nothing.
Var cross_entropy(Var probs, const Tensor& targets);
Var squared_error(Var a, Var b);
/// sum w * (a - b)^2 with a constant weight per element.
Var weighted_squared_error(Var a, Var b, const Tensor& weights);
/// ||W - I||_F^2 for square W.
Var frob_dev_from_identity(Var w);

}  // namespace aan::ad
