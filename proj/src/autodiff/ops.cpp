#include "aan/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aan/errors.hpp"

namespace aan::ad {

namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.shape().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + t.shape().str());
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
  }
}

void require_numel(const Tensor& t, std::size_t n, const char* op, const char* what) {
  if (t.size() != n) {
    throw DimensionError(std::string(op) + ": " + what + " has " + std::to_string(t.size()) +
                         " elements, expected " + std::to_string(n));
  }
}

void validate_segments(std::span<const Segment> segments, std::size_t rows, const char* op) {
  if (segments.empty()) throw DimensionError(std::string(op) + ": no segments");
  for (const Segment& s : segments) {
    if (s.length == 0 || s.offset + s.length > rows) {
      throw DimensionError(std::string(op) + ": segment [" + std::to_string(s.offset) + ", +" +
                           std::to_string(s.length) + ") outside " + std::to_string(rows) +
                           " rows");
    }
  }
}

// Elementwise op with a derivative expressed through input and output values.
template <typename Fwd, typename Deriv>
Var unary(Var x, Op op, Fwd fwd, Deriv deriv) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  const std::size_t ix = x.id();
  const std::size_t self = x.tape()->size();
  return x.tape()->record(op, std::move(out), {x}, [ix, self, deriv](Tape& t, const Tensor& g) {
    const Tensor& in = t.value(ix);
    const Tensor& out = t.value(self);
    Tensor& dx = t.accumulate(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * deriv(in[i], out[i]);
  });
}

struct PoolResult {
  Tensor value;
  std::vector<std::size_t> argmax;  // row index per output element, max pooling only
};

PoolResult max_pool_impl(const Tensor& in, std::span<const Segment> segments, Shape out_shape) {
  const std::size_t f = in.cols();
  PoolResult r{Tensor(std::move(out_shape)), std::vector<std::size_t>(segments.size() * f)};
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment seg = segments[s];
    for (std::size_t c = 0; c < f; ++c) {
      std::size_t best = seg.offset;
      double best_v = in.at(seg.offset, c);
      for (std::size_t row = seg.offset + 1; row < seg.offset + seg.length; ++row) {
        if (in.at(row, c) > best_v) {
          best_v = in.at(row, c);
          best = row;
        }
      }
      r.value[s * f + c] = best_v;
      r.argmax[s * f + c] = best;
    }
  }
  return r;
}

Var max_pool_common(Var x, std::span<const Segment> segments, Shape out_shape) {
  PoolResult r = max_pool_impl(x.value(), segments, std::move(out_shape));
  const std::size_t ix = x.id();
  const std::size_t f = x.value().cols();
  return x.tape()->record(
      Op::max_pool, std::move(r.value), {x},
      [ix, f, argmax = std::move(r.argmax)](Tape& t, const Tensor& g) {
        Tensor& dx = t.accumulate(ix);
        for (std::size_t k = 0; k < argmax.size(); ++k) dx.at(argmax[k], k % f) += g[k];
      });
}

Var mean_pool_common(Var x, std::span<const Segment> segments, Shape out_shape) {
  const Tensor& in = x.value();
  const std::size_t f = in.cols();
  Tensor out(std::move(out_shape));
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const double inv = 1.0 / static_cast<double>(segments[s].length);
    for (std::size_t row = segments[s].offset; row < segments[s].offset + segments[s].length;
         ++row) {
      for (std::size_t c = 0; c < f; ++c) out[s * f + c] += in.at(row, c) * inv;
    }
  }
  const std::size_t ix = x.id();
  std::vector<Segment> segs(segments.begin(), segments.end());
  return x.tape()->record(Op::mean_pool, std::move(out), {x},
                          [ix, f, segs = std::move(segs)](Tape& t, const Tensor& g) {
                            Tensor& dx = t.accumulate(ix);
                            for (std::size_t s = 0; s < segs.size(); ++s) {
                              const double inv = 1.0 / static_cast<double>(segs[s].length);
                              for (std::size_t row = segs[s].offset;
                                   row < segs[s].offset + segs[s].length; ++row) {
                                for (std::size_t c = 0; c < f; ++c) {
                                  dx.at(row, c) += g[s * f + c] * inv;
                                }
                              }
                            }
                          });
}

}  // namespace

// --- linear algebra -------------------------------------------------------

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank2(A, "matmul");
  require_rank2(B, "matmul");
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw DimensionError("matmul: inner dims disagree, " + A.shape().str() + " x " +
                         B.shape().str());
  }
  Tensor C(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C.ptr() + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = A.at(i, kk);
      if (av == 0.0) continue;
      const double* brow = B.ptr() + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(Op::matmul, std::move(C), {a, b},
                          [ia, ib, m, k, n](Tape& t, const Tensor& g) {
                            const Tensor& A = t.value(ia);
                            const Tensor& B = t.value(ib);
                            if (t.wants_grad(ia)) {
                              Tensor& dA = t.accumulate(ia);
                              for (std::size_t i = 0; i < m; ++i) {
                                const double* grow = g.ptr() + i * n;
                                for (std::size_t kk = 0; kk < k; ++kk) {
                                  const double* brow = B.ptr() + kk * n;
                                  double s = 0.0;
                                  for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                                  dA.at(i, kk) += s;
                                }
                              }
                            }
                            if (t.wants_grad(ib)) {
                              Tensor& dB = t.accumulate(ib);
                              for (std::size_t i = 0; i < m; ++i) {
                                const double* grow = g.ptr() + i * n;
                                for (std::size_t kk = 0; kk < k; ++kk) {
                                  const double av = A.at(i, kk);
                                  if (av == 0.0) continue;
                                  double* drow = dB.ptr() + kk * n;
                                  for (std::size_t j = 0; j < n; ++j) drow[j] += av * grow[j];
                                }
                              }
                            }
                          });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(Op::add, std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (t.wants_grad(ia)) t.accumulate(ia) += g;
    if (t.wants_grad(ib)) t.accumulate(ib) += g;
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(Op::mul, std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (t.wants_grad(ia)) {
      Tensor& da = t.accumulate(ia);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (t.wants_grad(ib)) {
      Tensor& db = t.accumulate(ib);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var add_bias(Var x, Var bias) {
  const Tensor& in = x.value();
  const std::size_t n = in.cols();
  require_numel(bias.value(), n, "add_bias", "bias");
  Tensor out = in;
  const Tensor& b = bias.value();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += b[c];
  }
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape()->record(Op::add_bias, std::move(out), {x, bias},
                          [ix, ib, n](Tape& t, const Tensor& g) {
                            if (t.wants_grad(ix)) t.accumulate(ix) += g;
                            if (t.wants_grad(ib)) {
                              Tensor& db = t.accumulate(ib);
                              for (std::size_t i = 0; i < g.size(); ++i) db[i % n] += g[i];
                            }
                          });
}

Var affine(Var x, Var weight, Var bias) { return add_bias(matmul(x, weight), bias); }

Var scale(Var x, double c) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= c;
  const std::size_t ix = x.id();
  return x.tape()->record(Op::scale, std::move(out), {x}, [ix, c](Tape& t, const Tensor& g) {
    Tensor& dx = t.accumulate(ix);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += c * g[i];
  });
}

Var sum(Var x) {
  Tensor out(Shape{1}, x.value().sum());
  const std::size_t ix = x.id();
  return x.tape()->record(Op::sum, std::move(out), {x}, [ix](Tape& t, const Tensor& g) {
    Tensor& dx = t.accumulate(ix);
    for (double& v : dx.data()) v += g[0];
  });
}

Var embedding(Var table, std::span<const std::size_t> ids) {
  const Tensor& E = table.value();
  require_rank2(E, "embedding");
  if (ids.empty()) throw DimensionError("embedding: no ids");
  const std::size_t d = E.cols();
  Tensor out(Shape{ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= E.rows()) {
      throw DimensionError("embedding: id " + std::to_string(ids[r]) + " outside table of " +
                           std::to_string(E.rows()) + " rows");
    }
    std::copy_n(E.ptr() + ids[r] * d, d, out.ptr() + r * d);
  }
  const std::size_t it = table.id();
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return table.tape()->record(Op::embedding, std::move(out), {table},
                              [it, d, idv = std::move(idv)](Tape& t, const Tensor& g) {
                                Tensor& dE = t.accumulate(it);
                                for (std::size_t r = 0; r < idv.size(); ++r) {
                                  double* dst = dE.ptr() + idv[r] * d;
                                  const double* src = g.ptr() + r * d;
                                  for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                                }
                              });
}

Var pick(Var x, std::span<const std::size_t> cols) {
  const Tensor& in = x.value();
  require_rank2(in, "pick");
  if (cols.size() != in.rows()) {
    throw DimensionError("pick: " + std::to_string(cols.size()) + " column indices for " +
                         std::to_string(in.rows()) + " rows");
  }
  const std::size_t n = in.cols();
  Tensor out(Shape{in.rows()});
  for (std::size_t r = 0; r < in.rows(); ++r) {
    if (cols[r] >= n) throw DimensionError("pick: column index out of range");
    out[r] = in.at(r, cols[r]);
  }
  const std::size_t ix = x.id();
  std::vector<std::size_t> cv(cols.begin(), cols.end());
  return x.tape()->record(Op::pick, std::move(out), {x},
                          [ix, n, cv = std::move(cv)](Tape& t, const Tensor& g) {
                            Tensor& dx = t.accumulate(ix);
                            for (std::size_t r = 0; r < cv.size(); ++r) dx[r * n + cv[r]] += g[r];
                          });
}

Var column(Var x, std::size_t col) {
  std::vector<std::size_t> cols(x.value().rows(), col);
  return pick(x, cols);
}

// --- convolution ----------------------------------------------------------

Var conv1d_segments(Var x, std::span<const Segment> segments, Var filters, Var bias,
                    std::size_t window) {
  if (window < 1 || window % 2 == 0) {
    throw ConfigError("conv1d: window must be odd and >= 1, got " + std::to_string(window));
  }
  const Tensor& in = x.value();
  const Tensor& W = filters.value();
  require_rank2(in, "conv1d");
  require_rank2(W, "conv1d");
  const std::size_t d = in.cols();
  const std::size_t f = W.cols();
  if (W.rows() != window * d) {
    throw DimensionError("conv1d: filters " + W.shape().str() + " do not match window " +
                         std::to_string(window) + " over " + std::to_string(d) + " inputs");
  }
  require_numel(bias.value(), f, "conv1d", "bias");
  validate_segments(segments, in.rows(), "conv1d");

  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(window / 2);
  Tensor out(Shape{in.rows(), f});
  const Tensor& b = bias.value();
  for (const Segment& seg : segments) {
    const auto lo = static_cast<std::ptrdiff_t>(seg.offset);
    const auto hi = static_cast<std::ptrdiff_t>(seg.offset + seg.length);
    for (std::ptrdiff_t j = lo; j < hi; ++j) {
      double* orow = out.ptr() + j * static_cast<std::ptrdiff_t>(f);
      std::copy_n(b.ptr(), f, orow);
      for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(window); ++k) {
        const std::ptrdiff_t src = j + k - half;
        if (src < lo || src >= hi) continue;
        const double* xrow = in.ptr() + src * static_cast<std::ptrdiff_t>(d);
        for (std::size_t c = 0; c < d; ++c) {
          const double xv = xrow[c];
          if (xv == 0.0) continue;
          const double* wrow = W.ptr() + (static_cast<std::size_t>(k) * d + c) * f;
          for (std::size_t o = 0; o < f; ++o) orow[o] += xv * wrow[o];
        }
      }
    }
  }

  const std::size_t ix = x.id(), iw = filters.id(), ib = bias.id();
  std::vector<Segment> segs(segments.begin(), segments.end());
  return x.tape()->record(
      Op::conv1d, std::move(out), {x, filters, bias},
      [ix, iw, ib, d, f, window, half, segs = std::move(segs)](Tape& t, const Tensor& g) {
        const Tensor& in = t.value(ix);
        const Tensor& W = t.value(iw);
        Tensor* dx = t.wants_grad(ix) ? &t.accumulate(ix) : nullptr;
        Tensor* dW = t.wants_grad(iw) ? &t.accumulate(iw) : nullptr;
        Tensor* db = t.wants_grad(ib) ? &t.accumulate(ib) : nullptr;
        for (const Segment& seg : segs) {
          const auto lo = static_cast<std::ptrdiff_t>(seg.offset);
          const auto hi = static_cast<std::ptrdiff_t>(seg.offset + seg.length);
          for (std::ptrdiff_t j = lo; j < hi; ++j) {
            const double* grow = g.ptr() + j * static_cast<std::ptrdiff_t>(f);
            if (db != nullptr) {
              for (std::size_t o = 0; o < f; ++o) (*db)[o] += grow[o];
            }
            for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(window); ++k) {
              const std::ptrdiff_t src = j + k - half;
              if (src < lo || src >= hi) continue;
              const double* xrow = in.ptr() + src * static_cast<std::ptrdiff_t>(d);
              for (std::size_t c = 0; c < d; ++c) {
                const std::size_t wr = static_cast<std::size_t>(k) * d + c;
                const double* wrow = W.ptr() + wr * f;
                if (dx != nullptr) {
                  double s = 0.0;
                  for (std::size_t o = 0; o < f; ++o) s += grow[o] * wrow[o];
                  dx->ptr()[src * static_cast<std::ptrdiff_t>(d) + static_cast<std::ptrdiff_t>(c)] += s;
                }
                if (dW != nullptr) {
                  const double xv = xrow[c];
                  if (xv == 0.0) continue;
                  double* dwrow = dW->ptr() + wr * f;
                  for (std::size_t o = 0; o < f; ++o) dwrow[o] += xv * grow[o];
                }
              }
            }
          }
        }
      });
}

Var conv1d_seq(Var x, Var filters, Var bias, std::size_t window) {
  require_rank2(x.value(), "conv1d");
  const Segment whole{0, x.value().rows()};
  return conv1d_segments(x, std::span<const Segment>(&whole, 1), filters, bias, window);
}

// --- elementwise ----------------------------------------------------------

Var relu(Var x) {
  return unary(
      x, Op::relu, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var tanh_op(Var x) {
  return unary(
      x, Op::tanh, [](double v) { return std::tanh(v); },
      [](double, double out) { return 1.0 - out * out; });
}

Var clip_upper(Var x, double c) {
  return unary(
      x, Op::clip_upper, [c](double v) { return v < c ? v : c; },
      [c](double in, double) { return in < c ? 1.0 : 0.0; });
}

Var softmax_rows(Var x) {
  const Tensor& in = x.value();
  const std::size_t n = in.cols();
  Tensor out(in.shape());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const double* irow = in.ptr() + r * n;
    double* orow = out.ptr() + r * n;
    const double mx = *std::max_element(irow, irow + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += (orow[c] = std::exp(irow[c] - mx));
    for (std::size_t c = 0; c < n; ++c) orow[c] /= z;
  }
  const std::size_t ix = x.id();
  const std::size_t self = x.tape()->size();
  return x.tape()->record(Op::softmax, std::move(out), {x},
                          [ix, self, n](Tape& t, const Tensor& g) {
                            const Tensor& y = t.value(self);
                            Tensor& dx = t.accumulate(ix);
                            for (std::size_t r = 0; r < y.rows(); ++r) {
                              double dot = 0.0;
                              for (std::size_t c = 0; c < n; ++c) dot += g[r * n + c] * y[r * n + c];
                              for (std::size_t c = 0; c < n; ++c) {
                                dx[r * n + c] += y[r * n + c] * (g[r * n + c] - dot);
                              }
                            }
                          });
}

// --- pooling --------------------------------------------------------------

Var max_pool_rows(Var x) {
  require_rank2(x.value(), "max_pool_rows");
  const Segment whole{0, x.value().rows()};
  return max_pool_common(x, std::span<const Segment>(&whole, 1), Shape{x.value().cols()});
}

Var mean_rows(Var x) {
  require_rank2(x.value(), "mean_rows");
  const Segment whole{0, x.value().rows()};
  return mean_pool_common(x, std::span<const Segment>(&whole, 1), Shape{x.value().cols()});
}

Var max_pool_segments(Var x, std::span<const Segment> segments) {
  require_rank2(x.value(), "max_pool_segments");
  validate_segments(segments, x.value().rows(), "max_pool_segments");
  return max_pool_common(x, segments, Shape{segments.size(), x.value().cols()});
}

Var mean_pool_segments(Var x, std::span<const Segment> segments) {
  require_rank2(x.value(), "mean_pool_segments");
  validate_segments(segments, x.value().rows(), "mean_pool_segments");
  return mean_pool_common(x, segments, Shape{segments.size(), x.value().cols()});
}

namespace {

Var weighted_sum_impl(Var x, Var weights, std::span<const Segment> segments,
                      double fallback_below, Shape out_shape) {
  const Tensor& in = x.value();
  const Tensor& w = weights.value();
  require_rank2(in, "weighted_sum");
  require_numel(w, in.rows(), "weighted_sum", "weights");
  validate_segments(segments, in.rows(), "weighted_sum");
  for (double v : w.data()) {
    if (!(v >= 0.0)) throw ContractViolation("weighted_sum: weights must be non-negative");
  }
  const std::size_t f = in.cols();
  Tensor out(std::move(out_shape));
  std::vector<double> denom(segments.size());
  std::vector<char> uniform(segments.size(), 0);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment seg = segments[s];
    double total = 0.0;
    for (std::size_t i = seg.offset; i < seg.offset + seg.length; ++i) total += w[i];
    double* orow = out.ptr() + s * f;
    if (total < fallback_below) {
      uniform[s] = 1;
      denom[s] = static_cast<double>(seg.length);
      for (std::size_t i = seg.offset; i < seg.offset + seg.length; ++i) {
        for (std::size_t c = 0; c < f; ++c) orow[c] += in.at(i, c);
      }
    } else {
      denom[s] = total + kPoolEpsilon;
      for (std::size_t i = seg.offset; i < seg.offset + seg.length; ++i) {
        if (w[i] == 0.0) continue;
        for (std::size_t c = 0; c < f; ++c) orow[c] += w[i] * in.at(i, c);
      }
    }
    for (std::size_t c = 0; c < f; ++c) orow[c] /= denom[s];
  }

  const std::size_t ix = x.id(), iw = weights.id();
  const std::size_t self = x.tape()->size();
  std::vector<Segment> segs(segments.begin(), segments.end());
  return x.tape()->record(
      Op::weighted_sum, std::move(out), {x, weights},
      [ix, iw, self, f, segs = std::move(segs), denom = std::move(denom),
       uniform = std::move(uniform)](Tape& t, const Tensor& g) {
        const Tensor& in = t.value(ix);
        const Tensor& w = t.value(iw);
        const Tensor& out = t.value(self);
        Tensor* dx = t.wants_grad(ix) ? &t.accumulate(ix) : nullptr;
        Tensor* dw = t.wants_grad(iw) ? &t.accumulate(iw) : nullptr;
        for (std::size_t s = 0; s < segs.size(); ++s) {
          const double* grow = g.ptr() + s * f;
          const double* orow = out.ptr() + s * f;
          for (std::size_t i = segs[s].offset; i < segs[s].offset + segs[s].length; ++i) {
            const double* xrow = in.ptr() + i * f;
            if (dx != nullptr) {
              const double k = uniform[s] ? 1.0 / denom[s] : w[i] / denom[s];
              double* dxrow = dx->ptr() + i * f;
              for (std::size_t c = 0; c < f; ++c) dxrow[c] += k * grow[c];
            }
            if (dw != nullptr && !uniform[s]) {
              double dot = 0.0;
              for (std::size_t c = 0; c < f; ++c) dot += (xrow[c] - orow[c]) * grow[c];
              (*dw)[i] += dot / denom[s];
            }
          }
        }
      });
}

}  // namespace

Var weighted_sum_segments(Var x, Var weights, std::span<const Segment> segments,
                          double fallback_below) {
  require_rank2(x.value(), "weighted_sum");
  return weighted_sum_impl(x, weights, segments, fallback_below,
                           Shape{segments.size(), x.value().cols()});
}

Var weighted_sum_rows(Var x, Var weights) {
  require_rank2(x.value(), "weighted_sum_rows");
  const Segment whole{0, x.value().rows()};
  return weighted_sum_impl(x, weights, std::span<const Segment>(&whole, 1), -1.0,
                           Shape{x.value().cols()});
}

// --- training-time layers -------------------------------------------------

Var grad_reverse(Var x, double rho) {
  if (!(rho >= 0.0)) throw ContractViolation("grad_reverse: rho must be >= 0");
  Tensor out = x.value();
  const std::size_t ix = x.id();
  const double k = -rho;
  return x.tape()->record(Op::grad_reverse, std::move(out), {x},
                          [ix, k](Tape& t, const Tensor& g) {
                            Tensor& dx = t.accumulate(ix);
                            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += k * g[i];
                          });
}

Var batch_norm(Var x, Var gamma, Var beta, Mode mode, BatchNormStats& stats) {
  const Tensor& in = x.value();
  require_rank2(in, "batch_norm");
  const std::size_t B = in.rows();
  const std::size_t f = in.cols();
  require_numel(gamma.value(), f, "batch_norm", "gamma");
  require_numel(beta.value(), f, "batch_norm", "beta");
  require_numel(stats.running_mean, f, "batch_norm", "running mean");
  const Tensor& ga = gamma.value();
  const Tensor& be = beta.value();
  const std::size_t ix = x.id(), ig = gamma.id(), ibt = beta.id();
  Tensor out(in.shape());

  if (mode == Mode::eval) {
    std::vector<double> inv(f), mean(f);
    for (std::size_t c = 0; c < f; ++c) {
      inv[c] = 1.0 / std::sqrt(stats.running_var[c] + stats.eps);
      mean[c] = stats.running_mean[c];
    }
    for (std::size_t r = 0; r < B; ++r) {
      for (std::size_t c = 0; c < f; ++c) {
        out.at(r, c) = ga[c] * (in.at(r, c) - mean[c]) * inv[c] + be[c];
      }
    }
    return x.tape()->record(
        Op::batch_norm, std::move(out), {x, gamma, beta},
        [ix, ig, ibt, B, f, inv = std::move(inv), mean = std::move(mean)](Tape& t,
                                                                          const Tensor& g) {
          const Tensor& in = t.value(ix);
          const Tensor& ga = t.value(ig);
          for (std::size_t r = 0; r < B; ++r) {
            for (std::size_t c = 0; c < f; ++c) {
              const double gv = g.at(r, c);
              if (t.wants_grad(ix)) t.accumulate(ix).at(r, c) += gv * ga[c] * inv[c];
              if (t.wants_grad(ig)) t.accumulate(ig)[c] += gv * (in.at(r, c) - mean[c]) * inv[c];
              if (t.wants_grad(ibt)) t.accumulate(ibt)[c] += gv;
            }
          }
        });
  }

  if (B < 2) {
    throw BatchSizeError("batch_norm: train mode needs at least 2 rows, got " +
                         std::to_string(B));
  }
  std::vector<double> mean(f, 0.0), var(f, 0.0), inv(f);
  for (std::size_t r = 0; r < B; ++r) {
    for (std::size_t c = 0; c < f; ++c) mean[c] += in.at(r, c);
  }
  for (double& m : mean) m /= static_cast<double>(B);
  for (std::size_t r = 0; r < B; ++r) {
    for (std::size_t c = 0; c < f; ++c) {
      const double dv = in.at(r, c) - mean[c];
      var[c] += dv * dv;
    }
  }
  for (double& v : var) v /= static_cast<double>(B);
  for (std::size_t c = 0; c < f; ++c) inv[c] = 1.0 / std::sqrt(var[c] + stats.eps);

  Tensor xhat(in.shape());
  for (std::size_t r = 0; r < B; ++r) {
    for (std::size_t c = 0; c < f; ++c) {
      xhat.at(r, c) = (in.at(r, c) - mean[c]) * inv[c];
      out.at(r, c) = ga[c] * xhat.at(r, c) + be[c];
    }
  }
  const double keep = stats.momentum;
  const double unbias = static_cast<double>(B) / static_cast<double>(B - 1);
  for (std::size_t c = 0; c < f; ++c) {
    stats.running_mean[c] = keep * stats.running_mean[c] + (1.0 - keep) * mean[c];
    stats.running_var[c] = keep * stats.running_var[c] + (1.0 - keep) * var[c] * unbias;
  }

  return x.tape()->record(
      Op::batch_norm, std::move(out), {x, gamma, beta},
      [ix, ig, ibt, B, f, inv = std::move(inv), xhat = std::move(xhat)](Tape& t,
                                                                        const Tensor& g) {
        const Tensor& ga = t.value(ig);
        std::vector<double> sum_g(f, 0.0), sum_gx(f, 0.0);
        for (std::size_t r = 0; r < B; ++r) {
          for (std::size_t c = 0; c < f; ++c) {
            sum_g[c] += g.at(r, c);
            sum_gx[c] += g.at(r, c) * xhat.at(r, c);
          }
        }
        if (t.wants_grad(ig)) {
          Tensor& dg = t.accumulate(ig);
          for (std::size_t c = 0; c < f; ++c) dg[c] += sum_gx[c];
        }
        if (t.wants_grad(ibt)) {
          Tensor& db = t.accumulate(ibt);
          for (std::size_t c = 0; c < f; ++c) db[c] += sum_g[c];
        }
        if (t.wants_grad(ix)) {
          Tensor& dx = t.accumulate(ix);
          const double nb = static_cast<double>(B);
          for (std::size_t r = 0; r < B; ++r) {
            for (std::size_t c = 0; c < f; ++c) {
              dx.at(r, c) += ga[c] * inv[c] / nb *
                             (nb * g.at(r, c) - sum_g[c] - xhat.at(r, c) * sum_gx[c]);
            }
          }
        }
      });
}

Var dropout(Var x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::eval || rate == 0.0) return x;
  const Tensor& in = x.value();
  Tensor mask(in.shape());
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] = in[i] * mask[i];
  }
  const std::size_t ix = x.id();
  return x.tape()->record(Op::dropout, std::move(out), {x},
                          [ix, mask = std::move(mask)](Tape& t, const Tensor& g) {
                            Tensor& dx = t.accumulate(ix);
                            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * mask[i];
                          });
}

// --- losses ---------------------------------------------------------------

Var cross_entropy(Var probs, const Tensor& targets) {
  const Tensor& p = probs.value();
  require_same_shape(p, targets, "cross_entropy");
  const std::size_t n = p.cols();
  double loss = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double row_sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) row_sum += p[r * n + c];
    if (std::abs(row_sum - 1.0) > 1e-6) {
      throw ContractViolation("cross_entropy: row " + std::to_string(r) +
                              " is not a distribution (sums to " + std::to_string(row_sum) +
                              ")");
    }
    for (std::size_t c = 0; c < n; ++c) {
      const double y = targets[r * n + c];
      if (y != 0.0) loss -= y * std::log(std::max(p[r * n + c], kLogClamp));
    }
  }
  const std::size_t ip = probs.id();
  return probs.tape()->record(Op::cross_entropy, Tensor(Shape{1}, loss), {probs},
                              [ip, targets](Tape& t, const Tensor& g) {
                                const Tensor& p = t.value(ip);
                                Tensor& dp = t.accumulate(ip);
                                for (std::size_t i = 0; i < p.size(); ++i) {
                                  if (targets[i] != 0.0 && p[i] > kLogClamp) {
                                    dp[i] -= g[0] * targets[i] / p[i];
                                  }
                                }
                              });
}

Var weighted_squared_error(Var a, Var b, const Tensor& weights) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size()) {
    throw DimensionError("squared_error: shape mismatch " + av.shape().str() + " vs " +
                         bv.shape().str());
  }
  require_numel(weights, av.size(), "squared_error", "weights");
  double loss = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double dv = av[i] - bv[i];
    loss += weights[i] * dv * dv;
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(Op::squared_error, Tensor(Shape{1}, loss), {a, b},
                          [ia, ib, weights](Tape& t, const Tensor& g) {
                            const Tensor& av = t.value(ia);
                            const Tensor& bv = t.value(ib);
                            Tensor* da = t.wants_grad(ia) ? &t.accumulate(ia) : nullptr;
                            Tensor* db = t.wants_grad(ib) ? &t.accumulate(ib) : nullptr;
                            for (std::size_t i = 0; i < av.size(); ++i) {
                              const double k = 2.0 * g[0] * weights[i] * (av[i] - bv[i]);
                              if (da != nullptr) (*da)[i] += k;
                              if (db != nullptr) (*db)[i] -= k;
                            }
                          });
}

Var squared_error(Var a, Var b) {
  return weighted_squared_error(a, b, Tensor(a.value().shape(), 1.0));
}

Var frob_dev_from_identity(Var w) {
  const Tensor& W = w.value();
  require_rank2(W, "frob_dev_from_identity");
  if (W.rows() != W.cols()) {
    throw DimensionError("frob_dev_from_identity: matrix " + W.shape().str() + " is not square");
  }
  const std::size_t n = W.rows();
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double dv = W.at(r, c) - (r == c ? 1.0 : 0.0);
      loss += dv * dv;
    }
  }
  const std::size_t iw = w.id();
  return w.tape()->record(Op::frob_dev, Tensor(Shape{1}, loss), {w},
                          [iw, n](Tape& t, const Tensor& g) {
                            const Tensor& W = t.value(iw);
                            Tensor& dW = t.accumulate(iw);
                            for (std::size_t r = 0; r < n; ++r) {
                              for (std::size_t c = 0; c < n; ++c) {
                                dW.at(r, c) +=
                                    2.0 * g[0] * (W.at(r, c) - (r == c ? 1.0 : 0.0));
                              }
                            }
                          });
}

}  // namespace aan::ad
