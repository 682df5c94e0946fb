#include <cmath>
#include <numbers>

#include "aan/autodiff/ops.hpp"
#include "aan/errors.hpp"
#include "doctest.h"
#include "gradcheck.hpp"

using namespace aan;
using namespace aan::ad;
using aan::testing::grad_check;
using aan::testing::nudge_from_zero;
using aan::testing::random_tensor;

namespace {

// Scalar probe: sum(x * c) with a fixed random c, so every output element
// receives a distinct upstream gradient.
Var probe(Tape& tape, Var x, std::uint64_t seed = 99) {
  Rng rng(seed);
  return sum(mul(x, tape.constant(random_tensor(x.shape(), rng))));
}

void require_close(const Tensor& a, const Tensor& b, double tol) {
  REQUIRE(a.shape() == b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(tol));
}

}  // namespace

TEST_CASE("matmul") {
  Tape tape;
  Var eye = tape.constant(Tensor::identity(2));
  Var m = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  CHECK(matmul(eye, m).value() == Tensor::matrix(2, 2, {1, 2, 3, 4}));

  Var row = tape.constant(Tensor::matrix(1, 2, {1, 0}));
  Var col = tape.constant(Tensor::matrix(2, 1, {2, 5}));
  CHECK(matmul(row, col).value() == Tensor::matrix(1, 1, {2}));

  CHECK_THROWS_AS(matmul(m, row), DimensionError);

  SUBCASE("gradient of sum(A B) wrt A matches finite differences") {
    Rng rng(1);
    auto res = grad_check({random_tensor(Shape{3, 3}, rng), random_tensor(Shape{3, 3}, rng)},
                          [](Tape&, const std::vector<Var>& v) { return sum(matmul(v[0], v[1])); },
                          {0});
    CHECK(res.max_rel_error < 1e-6);
  }
}

TEST_CASE("conv1d_seq") {
  SUBCASE("window 1 with identity filters is the identity") {
    Tape tape;
    Tensor x = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
    Var out = conv1d_seq(tape.constant(x), tape.constant(Tensor::identity(2)),
                         tape.constant(Tensor(Shape{2})), 1);
    CHECK(out.value() == x);
  }
  SUBCASE("single token with window 3 sees zero flanks") {
    Tape tape;
    // d = 2, f = 1; filter rows: [left slot (2), center (2), right (2)]
    Tensor filters = Tensor::matrix(6, 1, {10, 20, 1, 2, 30, 40});
    Var out = conv1d_seq(tape.constant(Tensor::matrix(1, 2, {3, 4})), tape.constant(filters),
                         tape.constant(Tensor::vector({0.5})), 3);
    CHECK(out.value()[0] == doctest::Approx(3 * 1 + 4 * 2 + 0.5));
  }
  SUBCASE("even window is a configuration error") {
    Tape tape;
    CHECK_THROWS_AS(conv1d_seq(tape.constant(Tensor(Shape{2, 2})),
                               tape.constant(Tensor(Shape{4, 1})),
                               tape.constant(Tensor(Shape{1})), 2),
                    ConfigError);
  }
  SUBCASE("gradient check L=4 d=3 f=2") {
    Rng rng(2);
    auto res = grad_check(
        {random_tensor(Shape{4, 3}, rng), random_tensor(Shape{9, 2}, rng),
         random_tensor(Shape{2}, rng)},
        [](Tape& t, const std::vector<Var>& v) { return probe(t, conv1d_seq(v[0], v[1], v[2], 3)); });
    CHECK(res.max_rel_error < 1e-6);
  }
  SUBCASE("segments are padded independently") {
    Rng rng(3);
    Tensor x = random_tensor(Shape{5, 2}, rng);
    Tensor w = random_tensor(Shape{6, 3}, rng);
    Tensor b = random_tensor(Shape{3}, rng);
    Tape tape;
    const Segment segs[] = {{0, 2}, {2, 3}};
    Var both = conv1d_segments(tape.constant(x), segs, tape.constant(w), tape.constant(b), 3);
    Var first = conv1d_seq(tape.constant(Tensor::matrix(2, 2, {x[0], x[1], x[2], x[3]})),
                           tape.constant(w), tape.constant(b), 3);
    for (std::size_t i = 0; i < 6; ++i) CHECK(both.value()[i] == first.value()[i]);
  }
}

TEST_CASE("elementwise activations") {
  Tape tape;
  Var r = relu(tape.constant(Tensor::vector({-1, 2})));
  CHECK(r.value() == Tensor::vector({0, 2}));

  Var s = softmax_rows(tape.constant(Tensor::vector({0, 0})));
  CHECK(s.value() == Tensor::vector({0.5, 0.5}));

  Var x = tape.variable(Tensor::vector({0.0}));
  Var t = tanh_op(x);
  tape.backward(sum(t));
  CHECK(x.grad()[0] == 1.0);

  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto res = grad_check({random_tensor(Shape{3, 4}, rng)},
                          [](Tape& tp, const std::vector<Var>& v) { return probe(tp, tanh_op(v[0])); });
    CHECK(res.max_rel_error < 1e-6);
    res = grad_check({nudge_from_zero(random_tensor(Shape{3, 4}, rng))},
                     [](Tape& tp, const std::vector<Var>& v) { return probe(tp, relu(v[0])); });
    CHECK(res.max_rel_error < 1e-6);
    res = grad_check({random_tensor(Shape{3, 4}, rng, -3, 3)},
                     [](Tape& tp, const std::vector<Var>& v) { return probe(tp, softmax_rows(v[0])); });
    CHECK(res.max_rel_error < 1e-6);
  }

  SUBCASE("softmax rows sum to one") {
    Tape tp;
    Rng r2(5);
    Var p = softmax_rows(tp.constant(random_tensor(Shape{20, 7}, r2, -30, 30)));
    for (std::size_t row = 0; row < 20; ++row) {
      double total = 0.0;
      for (std::size_t c = 0; c < 7; ++c) total += p.value().at(row, c);
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("max and mean pooling") {
  Tape tape;
  CHECK(max_pool_rows(tape.constant(Tensor::matrix(2, 2, {1, 5, 3, 2}))).value() ==
        Tensor::vector({3, 5}));
  CHECK(mean_rows(tape.constant(Tensor::matrix(1, 3, {1, 2, 3}))).value() ==
        Tensor::vector({1, 2, 3}));

  SUBCASE("ties route the gradient to the first row") {
    Tape tp;
    Var x = tp.variable(Tensor::matrix(2, 1, {2, 2}));
    tp.backward(sum(max_pool_rows(x)));
    CHECK(x.grad() == Tensor::matrix(2, 1, {1, 0}));
  }
  SUBCASE("empty input is rejected") {
    Tape tp;
    const std::vector<Segment> none;
    CHECK_THROWS_AS(max_pool_segments(tp.constant(Tensor(Shape{2, 2})), none), DimensionError);
  }
  SUBCASE("gradient checks") {
    Rng rng(6);
    auto res = grad_check({random_tensor(Shape{5, 3}, rng)},
                          [](Tape& t, const std::vector<Var>& v) { return probe(t, max_pool_rows(v[0])); });
    CHECK(res.max_rel_error < 1e-6);
    res = grad_check({random_tensor(Shape{5, 3}, rng)},
                     [](Tape& t, const std::vector<Var>& v) { return probe(t, mean_rows(v[0])); });
    CHECK(res.max_rel_error < 1e-6);
    const std::vector<Segment> segs{{0, 2}, {2, 1}, {3, 3}};
    res = grad_check({random_tensor(Shape{6, 3}, rng)}, [&](Tape& t, const std::vector<Var>& v) {
      return probe(t, max_pool_segments(v[0], segs));
    });
    CHECK(res.max_rel_error < 1e-6);
  }
}

TEST_CASE("weighted_sum_rows") {
  Tensor x = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
  SUBCASE("one-hot selects a row") {
    Tape tape;
    Var out = weighted_sum_rows(tape.constant(x), tape.constant(Tensor::vector({0, 0, 1})));
    require_close(out.value(), Tensor::vector({5, 6}), 1e-7);
  }
  SUBCASE("equal weights give the row mean") {
    Tape tape;
    Var out = weighted_sum_rows(tape.constant(x), tape.constant(Tensor::vector({2, 2, 2})));
    require_close(out.value(), Tensor::vector({3, 4}), 1e-8);
  }
  SUBCASE("negative weight violates the contract") {
    Tape tape;
    CHECK_THROWS_AS(weighted_sum_rows(tape.constant(x), tape.constant(Tensor::vector({1, -1, 1}))),
                    ContractViolation);
  }
  SUBCASE("gradient wrt rows and weights") {
    Rng rng(7);
    auto res = grad_check({random_tensor(Shape{4, 3}, rng), random_tensor(Shape{4}, rng, 0.1, 1.0)},
                          [](Tape& t, const std::vector<Var>& v) {
                            return probe(t, weighted_sum_rows(v[0], v[1]));
                          });
    CHECK(res.max_rel_error < 1e-6);
  }
  SUBCASE("positive rescaling of weights is invisible") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      Tensor xs = random_tensor(Shape{5, 4}, rng);
      Tensor w = random_tensor(Shape{5}, rng, 0.2, 1.0);  // sum >= 1
      const double c = rng.uniform(0.01, 100.0);
      Tensor cw = w;
      for (double& v : cw.data()) v *= c;
      Tape tape;
      Var a = weighted_sum_rows(tape.constant(xs), tape.constant(w));
      Var b = weighted_sum_rows(tape.constant(xs), tape.constant(cw));
      for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(a.value()[i] - b.value()[i]) < 1e-6);
    }
  }
  SUBCASE("segmented fallback pools uniformly below the threshold") {
    Tape tape;
    const std::vector<Segment> segs{{0, 2}, {2, 1}};
    Var w = tape.variable(Tensor::vector({0, 0, 3}));
    Var out = weighted_sum_segments(tape.constant(x), w, segs, 1e-6);
    require_close(out.value(), Tensor::matrix(2, 2, {2, 3, 5, 6}), 1e-7);
    tape.backward(sum(out));
    CHECK(w.grad()[0] == 0.0);
    CHECK(w.grad()[1] == 0.0);
  }
}

TEST_CASE("grad_reverse") {
  Rng rng(9);
  const Tensor v = random_tensor(Shape{3, 2}, rng);
  const Tensor g = random_tensor(Shape{3, 2}, rng);
  for (double rho : {0.7, 1.0, 0.0, 3.25}) {
    Tape tape;
    Var x = tape.variable(v);
    Var y = grad_reverse(x, rho);
    CHECK(y.value() == v);
    // sum(y * g) injects exactly g as the upstream gradient of y.
    tape.backward(sum(mul(y, tape.constant(g))));
    CHECK(y.grad() == g);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(x.grad()[i] == -rho * g[i]);
    if (rho == 0.0) {
      for (double d : x.grad().data()) CHECK(d == 0.0);
    }
  }
}

TEST_CASE("batch_norm") {
  SUBCASE("constant column maps to beta in train mode") {
    Tape tape;
    BatchNormStats stats(2);
    Var out = batch_norm(tape.constant(Tensor::matrix(3, 2, {4, 1, 4, 2, 4, 3})),
                         tape.constant(Tensor::vector({2, 1})),
                         tape.constant(Tensor::vector({0.25, 0})), Mode::train, stats);
    for (std::size_t r = 0; r < 3; ++r) CHECK(out.value().at(r, 0) == 0.25);
  }
  SUBCASE("standardized batch passes through") {
    // Standardized under the layer's own guard: var + eps == 1.
    const double a = std::sqrt(1.0 - 1e-5);
    Tensor x = Tensor::matrix(4, 1, {a, -a, a, -a});
    Tape tape;
    BatchNormStats stats(1);
    Var out = batch_norm(tape.constant(x), tape.constant(Tensor::vector({1})),
                         tape.constant(Tensor::vector({0})), Mode::train, stats);
    for (std::size_t r = 0; r < 4; ++r) CHECK(std::abs(out.value()[r] - x[r]) < 1e-6);
  }
  SUBCASE("train mode needs two rows") {
    Tape tape;
    BatchNormStats stats(2);
    CHECK_THROWS_AS(batch_norm(tape.constant(Tensor::matrix(1, 2, {1, 2})),
                               tape.constant(Tensor::vector({1, 1})),
                               tape.constant(Tensor::vector({0, 0})), Mode::train, stats),
                    BatchSizeError);
  }
  SUBCASE("running statistics use momentum 0.9 and drive eval mode") {
    Tape tape;
    BatchNormStats stats(1);
    batch_norm(tape.constant(Tensor::matrix(2, 1, {1, 3})), tape.constant(Tensor::vector({1})),
               tape.constant(Tensor::vector({0})), Mode::train, stats);
    CHECK(stats.running_mean[0] == doctest::Approx(0.2));
    CHECK(stats.running_var[0] == doctest::Approx(0.9 + 0.1 * 2.0));
    Var ev = batch_norm(tape.constant(Tensor::matrix(1, 1, {0.2})),
                        tape.constant(Tensor::vector({1})), tape.constant(Tensor::vector({0.5})),
                        Mode::eval, stats);
    CHECK(ev.value()[0] == doctest::Approx(0.5));
  }
  SUBCASE("gradient checks in both modes") {
    Rng rng(10);
    BatchNormStats stats(3);
    auto train = grad_check(
        {random_tensor(Shape{5, 3}, rng), random_tensor(Shape{3}, rng, 0.5, 1.5),
         random_tensor(Shape{3}, rng)},
        [&](Tape& t, const std::vector<Var>& v) {
          return probe(t, batch_norm(v[0], v[1], v[2], Mode::train, stats));
        });
    CHECK(train.max_rel_error < 1e-5);
    auto eval = grad_check(
        {random_tensor(Shape{4, 3}, rng), random_tensor(Shape{3}, rng, 0.5, 1.5),
         random_tensor(Shape{3}, rng)},
        [&](Tape& t, const std::vector<Var>& v) {
          return probe(t, batch_norm(v[0], v[1], v[2], Mode::eval, stats));
        });
    CHECK(eval.max_rel_error < 1e-6);
  }
}

TEST_CASE("dropout") {
  Rng rng(11);
  Tape tape;
  Var x = tape.constant(random_tensor(Shape{4, 4}, rng));
  CHECK(dropout(x, 0.0, Mode::train, rng).value() == x.value());
  CHECK(dropout(x, 0.9, Mode::eval, rng).value() == x.value());
  CHECK_THROWS_AS(dropout(x, 1.0, Mode::train, rng), ConfigError);

  SUBCASE("keep fraction over 1e5 elements") {
    Tape tp;
    Var ones = tp.constant(Tensor(Shape{100000}, 1.0));
    Var out = dropout(ones, 0.2, Mode::train, rng);
    std::size_t dropped = 0;
    for (double v : out.value().data()) {
      if (v == 0.0) {
        ++dropped;
      } else {
        CHECK(v == doctest::Approx(1.25));
      }
    }
    const double frac = static_cast<double>(dropped) / 1e5;
    CHECK(frac > 0.19);
    CHECK(frac < 0.21);
  }
}

TEST_CASE("losses") {
  Tape tape;
  SUBCASE("cross entropy") {
    Var perfect = cross_entropy(tape.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})),
                                Tensor::matrix(2, 2, {1, 0, 0, 1}));
    CHECK(perfect.value()[0] == doctest::Approx(0.0));
    Var uniform = cross_entropy(tape.constant(Tensor::matrix(1, 2, {0.5, 0.5})),
                                Tensor::matrix(1, 2, {0, 1}));
    CHECK(uniform.value()[0] == doctest::Approx(std::numbers::ln2));
    Var wrong = cross_entropy(tape.constant(Tensor::matrix(1, 2, {1, 0})),
                              Tensor::matrix(1, 2, {0, 1}));
    CHECK(wrong.value()[0] == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(cross_entropy(tape.constant(Tensor::matrix(1, 2, {0.7, 0.7})),
                                  Tensor::matrix(1, 2, {1, 0})),
                    ContractViolation);
  }
  SUBCASE("frobenius deviation from identity") {
    CHECK(frob_dev_from_identity(tape.constant(Tensor::identity(3))).value()[0] == 0.0);
    Tensor two = Tensor::identity(3);
    for (double& v : two.data()) v *= 2.0;
    CHECK(frob_dev_from_identity(tape.constant(two)).value()[0] == doctest::Approx(3.0));
    CHECK_THROWS_AS(frob_dev_from_identity(tape.constant(Tensor(Shape{2, 3}))), DimensionError);
  }
  SUBCASE("squared error") {
    Var se = squared_error(tape.constant(Tensor::vector({1, 2})),
                           tape.constant(Tensor::vector({0, 4})));
    CHECK(se.value()[0] == 5.0);
  }
  SUBCASE("gradient checks") {
    Rng rng(12);
    Tensor y(Shape{3, 4});
    y.at(0, 1) = 1;
    y.at(1, 3) = 1;
    y.at(2, 0) = 1;
    auto res = grad_check({random_tensor(Shape{3, 4}, rng, -2, 2)},
                          [&](Tape&, const std::vector<Var>& v) {
                            return cross_entropy(softmax_rows(v[0]), y);
                          });
    CHECK(res.max_rel_error < 1e-6);
    res = grad_check({random_tensor(Shape{3, 3}, rng)}, [](Tape&, const std::vector<Var>& v) {
      return frob_dev_from_identity(v[0]);
    });
    CHECK(res.max_rel_error < 1e-6);
    Tensor w = random_tensor(Shape{2, 3}, rng, 0, 2);
    res = grad_check({random_tensor(Shape{2, 3}, rng), random_tensor(Shape{2, 3}, rng)},
                     [&](Tape&, const std::vector<Var>& v) {
                       return weighted_squared_error(v[0], v[1], w);
                     });
    CHECK(res.max_rel_error < 1e-6);
  }
  SUBCASE("cross entropy is non-negative") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
      Tape tp;
      Tensor y(Shape{2, 3});
      y.at(0, rng.index(3)) = 1;
      y.at(1, rng.index(3)) = 1;
      Var p = softmax_rows(tp.constant(random_tensor(Shape{2, 3}, rng, -20, 20)));
      CHECK(cross_entropy(p, y).value()[0] >= 0.0);
    }
  }
}

TEST_CASE("backward semantics") {
  SUBCASE("gradient of sum is all ones") {
    Tape tape;
    Var x = tape.variable(Tensor(Shape{2, 3}, 0.3));
    tape.backward(sum(x));
    CHECK(x.grad() == Tensor(Shape{2, 3}, 1.0));
  }
  SUBCASE("fan-out accumulates") {
    Tape tape;
    Var x = tape.variable(Tensor::vector({0.3, -0.4}));
    // y = tanh(x) + x*x  ->  dy/dx = 1 - tanh^2 + 2x
    tape.backward(sum(add(tanh_op(x), mul(x, x))));
    for (std::size_t i = 0; i < 2; ++i) {
      const double v = x.value()[i];
      const double t = std::tanh(v);
      CHECK(x.grad()[i] == doctest::Approx(1 - t * t + 2 * v));
    }
  }
  SUBCASE("non-scalar loss is rejected") {
    Tape tape;
    Var x = tape.variable(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(tape.backward(x), ContractViolation);
  }
  SUBCASE("second backward doubles every gradient") {
    Rng rng(14);
    Tape tape;
    Parameter p("w", random_tensor(Shape{3, 2}, rng));
    Var x = tape.variable(random_tensor(Shape{4, 3}, rng));
    Var w = tape.parameter(p);
    Var h = tanh_op(matmul(x, w));
    Var loss = sum(mul(h, h));
    tape.backward(loss);
    const Tensor gx = x.grad(), gw = w.grad(), gh = h.grad(), gp = p.grad;
    tape.backward(loss);
    for (std::size_t i = 0; i < gx.size(); ++i) CHECK(x.grad()[i] == 2.0 * gx[i]);
    for (std::size_t i = 0; i < gw.size(); ++i) CHECK(w.grad()[i] == 2.0 * gw[i]);
    for (std::size_t i = 0; i < gh.size(); ++i) CHECK(h.grad()[i] == 2.0 * gh[i]);
    for (std::size_t i = 0; i < gp.size(); ++i) CHECK(p.grad[i] == 2.0 * gp[i]);
  }
  SUBCASE("parameters bind once per tape and skip frozen values") {
    Tape tape;
    Parameter p("w", Tensor::vector({1, 2}));
    CHECK(tape.parameter(p).id() == tape.parameter(p).id());
    Parameter frozen("f", Tensor::vector({1, 2}));
    frozen.trainable = false;
    Var f = tape.parameter(frozen);
    CHECK_FALSE(f.requires_grad());
    tape.backward(sum(add(tape.parameter(p), f)));
    CHECK(p.grad == Tensor::vector({1, 1}));
    CHECK(frozen.grad == Tensor::vector({0, 0}));
  }
}

TEST_CASE("every op agrees with finite differences on random inputs") {
  // Property sweep at tolerance 1e-4 over several random draws. grad_reverse is
  // excluded: its backward is deliberately not the derivative of its forward.
  Rng rng(15);
  const std::vector<Segment> segs{{0, 3}, {3, 2}};
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<std::pair<std::string, aan::testing::GradCheck>> results;
    results.emplace_back("matmul", grad_check({random_tensor(Shape{2, 3}, rng),
                                               random_tensor(Shape{3, 4}, rng)},
                                              [](Tape& t, const std::vector<Var>& v) {
                                                return probe(t, matmul(v[0], v[1]));
                                              }));
    results.emplace_back("affine", grad_check({random_tensor(Shape{2, 3}, rng),
                                               random_tensor(Shape{3, 2}, rng),
                                               random_tensor(Shape{2}, rng)},
                                              [](Tape& t, const std::vector<Var>& v) {
                                                return probe(t, affine(v[0], v[1], v[2]));
                                              }));
    results.emplace_back("conv1d_segments",
                         grad_check({random_tensor(Shape{5, 2}, rng), random_tensor(Shape{6, 3}, rng),
                                     random_tensor(Shape{3}, rng)},
                                    [&](Tape& t, const std::vector<Var>& v) {
                                      return probe(t, conv1d_segments(v[0], segs, v[1], v[2], 3));
                                    }));
    results.emplace_back("weighted_sum_segments",
                         grad_check({random_tensor(Shape{5, 3}, rng),
                                     random_tensor(Shape{5}, rng, 0.05, 1.0)},
                                    [&](Tape& t, const std::vector<Var>& v) {
                                      return probe(t, weighted_sum_segments(v[0], v[1], segs, 1e-6));
                                    }));
    results.emplace_back("mean_pool_segments",
                         grad_check({random_tensor(Shape{5, 3}, rng)},
                                    [&](Tape& t, const std::vector<Var>& v) {
                                      return probe(t, mean_pool_segments(v[0], segs));
                                    }));
    results.emplace_back("pick", grad_check({random_tensor(Shape{3, 2}, rng)},
                                            [](Tape& t, const std::vector<Var>& v) {
                                              const std::vector<std::size_t> cols{1, 0, 1};
                                              return probe(t, pick(v[0], cols));
                                            }));
    results.emplace_back("embedding", grad_check({random_tensor(Shape{4, 3}, rng)},
                                                 [](Tape& t, const std::vector<Var>& v) {
                                                   const std::vector<std::size_t> ids{2, 0, 2, 3};
                                                   return probe(t, embedding(v[0], ids));
                                                 }));
    results.emplace_back("clip_upper", grad_check({nudge_from_zero(random_tensor(Shape{3, 3}, rng))},
                                                  [](Tape& t, const std::vector<Var>& v) {
                                                    return probe(t, clip_upper(v[0], 0.0));
                                                  }));
    results.emplace_back("scale_add", grad_check({random_tensor(Shape{2, 2}, rng),
                                                  random_tensor(Shape{2, 2}, rng)},
                                                 [](Tape& t, const std::vector<Var>& v) {
                                                   return probe(t, add(scale(v[0], -1.5), mul(v[0], v[1])));
                                                 }));
    for (const auto& [name, res] : results) {
      INFO(name << " " << res.worst);
      CHECK(res.max_rel_error < 1e-4);
    }
  }
}
