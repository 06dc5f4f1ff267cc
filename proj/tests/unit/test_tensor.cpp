#include <doctest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "sdd/error.hpp"
#include "sdd/rng.hpp"
#include "sdd/tensor.hpp"

using namespace sdd;

namespace {

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(1e-2, std::fabs(b));
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("shape_numel multiplies dimensions") {
  CHECK(shape_numel({2, 3}) == 6);
  CHECK(shape_numel({7}) == 7);
  CHECK(shape_numel({4, 1, 5}) == 20);
}

TEST_CASE("tensor constructors validate element counts") {
  Tensor t({2, 2}, {1, 2, 3, 4});
  CHECK(t.size() == 4);
  CHECK(t.dim(1) == 2);
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
  Tensor z = Tensor::zeros({3});
  CHECK(z.data == std::vector<double>{0, 0, 0});
  Tensor f = Tensor::full({2}, 2.5);
  CHECK(f.data == std::vector<double>{2.5, 2.5});
}

TEST_CASE("check_finite rejects NaN and infinity") {
  Tensor t({2}, {1.0, 2.0});
  CHECK_NOTHROW(t.check_finite("t"));
  t.data[1] = std::nan("");
  CHECK_THROWS_AS(t.check_finite("t"), NumericError);
  t.data[1] = HUGE_VAL;
  CHECK_THROWS_AS(t.check_finite("t"), NumericError);
}

TEST_CASE("matmul matches a hand-computed product") {
  Tape t;
  Value a = t.constant(Tensor({2, 2}, {1, 2, 3, 4}));
  Value b = t.constant(Tensor({2, 1}, {0, 1}));
  Value c = t.matmul(a, b);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c.data() == std::vector<double>{2, 4});
}

TEST_CASE("matmul by identity is the identity") {
  Tape t;
  Value a = t.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Value i3 = t.constant(Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  CHECK(t.matmul(a, i3).data() == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tape t;
  Value a = t.constant(Tensor::zeros({2, 2}));
  Value b = t.constant(Tensor::zeros({3, 1}));
  CHECK_THROWS_AS(t.matmul(a, b), ShapeError);
}

TEST_CASE("elementwise ops match hand values") {
  Tape t;
  Value a = t.constant(Tensor({2, 2}, {1, 2, 3, 4}));
  Value b = t.constant(Tensor({2, 2}, {10, 20, 30, 40}));
  CHECK(t.add(a, b).data() == std::vector<double>{11, 22, 33, 44});
  CHECK(t.mul(a, b).data() == std::vector<double>{10, 40, 90, 160});
  CHECK(t.scale(a, -2.0).data() == std::vector<double>{-2, -4, -6, -8});
  CHECK(t.sum(a).scalar() == 10.0);
  Value v = t.constant(Tensor({2}, {100, 200}));
  CHECK(t.add_rowvec(a, v).data() == std::vector<double>{101, 202, 103, 204});
  Value bad = t.constant(Tensor::zeros({3}));
  CHECK_THROWS_AS(t.add_rowvec(a, bad), ShapeError);
  CHECK_THROWS_AS(t.add(a, bad), ShapeError);
}

TEST_CASE("relu clamps and uses zero subgradient at the kink") {
  Tensor x({3}, {-1.0, 0.0, 2.0});
  x.requires_grad = true;
  Tape t;
  Value y = t.relu(t.leaf(x));
  CHECK(y.data() == std::vector<double>{0, 0, 2});
  t.backward(t.sum(y));
  CHECK(x.grad == std::vector<double>{0, 0, 1});
}

TEST_CASE("cross entropy of uniform logits is ln C") {
  for (int c : {2, 7, 10}) {
    for (double fill : {0.0, 2.5}) {
      Tape t;
      Value logits = t.constant(Tensor::full({3, c}, fill));
      Value loss = t.softmax_cross_entropy(logits, {0, 1, c - 1});
      CHECK(std::fabs(loss.scalar() - std::log(double(c))) < 1e-12);
    }
  }
}

TEST_CASE("cross entropy saturates without overflow") {
  Tape t;
  Value logits = t.constant(Tensor({1, 2}, {50.0, 0.0}));
  double loss = t.softmax_cross_entropy(logits, {0}).scalar();
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-9);  // ln(1 + e^-50)
  Tape t2;
  Value logits2 = t2.constant(Tensor({1, 2}, {50.0, 0.0}));
  double wrong = t2.softmax_cross_entropy(logits2, {1}).scalar();
  CHECK(wrong == doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("cross entropy gradient is (softmax - onehot) / batch") {
  Tensor logits({1, 2}, {0.0, 0.0});
  logits.requires_grad = true;
  Tape t;
  t.backward(t.softmax_cross_entropy(t.leaf(logits), {0}));
  CHECK(std::fabs(logits.grad[0] - (-0.5)) < 1e-15);
  CHECK(std::fabs(logits.grad[1] - 0.5) < 1e-15);
}

TEST_CASE("cross entropy validates targets") {
  Tape t;
  Value logits = t.constant(Tensor::zeros({2, 3}));
  CHECK_THROWS_AS(t.softmax_cross_entropy(logits, {0, 3}), InputError);
  CHECK_THROWS_AS(t.softmax_cross_entropy(logits, {-1, 0}), InputError);
  CHECK_THROWS_AS(t.softmax_cross_entropy(logits, {0}), InputError);
}

TEST_CASE("kl loss matches a hand-computed value") {
  // teacher [ln 3, 0], student [0, 0], tau 1:
  // p = (3/4, 1/4), q = (1/2, 1/2), KL = sum p ln(p/q).
  Tape t;
  Value student = t.constant(Tensor({1, 2}, {0.0, 0.0}));
  Value teacher = t.constant(Tensor({1, 2}, {std::log(3.0), 0.0}));
  double kl = t.kl_divergence_loss(student, teacher, 1.0).scalar();
  double expect = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
  CHECK(std::fabs(kl - expect) < 1e-14);
  CHECK(kl == doctest::Approx(0.130812035941137).epsilon(1e-12));
}

TEST_CASE("kl loss is zero iff softened distributions match") {
  Tape t;
  Value a = t.constant(Tensor({1, 3}, {0.4, -1.2, 2.0}));
  // A constant logit shift leaves the softmax unchanged.
  Value b = t.constant(Tensor({1, 3}, {0.4 + 3.7, -1.2 + 3.7, 2.0 + 3.7}));
  Value c = t.constant(Tensor({1, 3}, {0.4, -1.2, 2.1}));
  CHECK(std::fabs(t.kl_divergence_loss(a, a, 2.0).scalar()) < 1e-12);
  CHECK(std::fabs(t.kl_divergence_loss(b, a, 1.0).scalar()) < 1e-12);
  CHECK(t.kl_divergence_loss(c, a, 1.0).scalar() > 1e-6);
}

TEST_CASE("kl loss is never negative over random logit pairs") {
  Rng rng(derive_seed(7, "kl-nonneg"));
  for (int trial = 0; trial < 50; ++trial) {
    Tensor s = Tensor::zeros({2, 5});
    Tensor p = Tensor::zeros({2, 5});
    for (auto& v : s.data) v = rng.uniform(-4, 4);
    for (auto& v : p.data) v = rng.uniform(-4, 4);
    Tape t;
    double kl =
        t.kl_divergence_loss(t.constant(s), t.constant(p), 4.0).scalar();
    CHECK(kl >= -1e-15);
  }
}

TEST_CASE("kl gradient is tau/B times (soft student - soft teacher)") {
  Tensor student({1, 2}, {0.0, 0.0});
  student.requires_grad = true;
  Tape t;
  Value teacher = t.constant(Tensor({1, 2}, {std::log(3.0), 0.0}));
  t.backward(t.kl_divergence_loss(t.leaf(student), teacher, 1.0));
  CHECK(std::fabs(student.grad[0] - (0.5 - 0.75)) < 1e-15);
  CHECK(std::fabs(student.grad[1] - (0.5 - 0.25)) < 1e-15);
}

TEST_CASE("masked_linear matches the unfused hand computation") {
  Tensor x({1, 2}, {1, 2});
  Tensor w({2, 2}, {3, 4, 5, 6});
  Tensor b({2}, {10, 20});
  x.requires_grad = w.requires_grad = b.requires_grad = true;
  Tape t;
  Value mask = t.constant(Tensor({2, 2}, {1, 0, 1, 1}));
  Value y = t.masked_linear(t.leaf(x), t.leaf(w), mask, t.leaf(b));
  CHECK(y.data() == std::vector<double>{13, 37});
  t.backward(t.sum(y));
  CHECK(x.grad == std::vector<double>{8, 6});
  CHECK(w.grad == std::vector<double>{1, 0, 1, 2});  // masked on accumulation
  CHECK(b.grad == std::vector<double>{1, 1});
}

TEST_CASE("masked_linear validates shapes") {
  Tape t;
  Value x = t.constant(Tensor::zeros({1, 3}));
  Value w = t.constant(Tensor::zeros({2, 2}));
  Value m = t.constant(Tensor::full({2, 2}, 1.0));
  Value b = t.constant(Tensor::zeros({2}));
  CHECK_THROWS_AS(t.masked_linear(x, w, m, b), ShapeError);
}

TEST_CASE("finite differences confirm gradients of a composite graph") {
  // Values chosen to keep every relu pre-activation away from the kink.
  std::vector<double> av = {0.3, -0.2, 0.5, 0.7, 0.1, -0.4};
  std::vector<double> bv = {0.2, -0.6, 0.4, 0.3, -0.5, 0.8};
  std::vector<double> cv = {1.5, -2.0};
  auto eval = [&]() {
    Tensor a({2, 3}, av), b({3, 2}, bv), c({2}, cv);
    Tape t;
    Value z = t.relu(t.matmul(t.constant(a), t.constant(b)));
    Value y = t.add_rowvec(t.scale(z, 1.25), t.constant(c));
    return t.sum(t.mul(y, y)).scalar();
  };
  auto grads = [&]() {
    Tensor a({2, 3}, av), b({3, 2}, bv), c({2}, cv);
    a.requires_grad = b.requires_grad = c.requires_grad = true;
    Tape t;
    Value z = t.relu(t.matmul(t.leaf(a), t.leaf(b)));
    Value y = t.add_rowvec(t.scale(z, 1.25), t.leaf(c));
    t.backward(t.sum(t.mul(y, y)));
    return std::tuple{a.grad, b.grad, c.grad};
  };
  auto [ga, gb, gc] = grads();
  std::vector<std::pair<std::vector<double>*, std::vector<double>*>> slots = {
      {&av, &ga}, {&bv, &gb}, {&cv, &gc}};
  for (auto [vals, grad] : slots) {
    for (size_t i = 0; i < vals->size(); ++i) {
      double keep = (*vals)[i];
      (*vals)[i] = keep + 1e-5;
      double fp = eval();
      (*vals)[i] = keep - 1e-5;
      double fm = eval();
      (*vals)[i] = keep;
      double numeric = (fp - fm) / 2e-5;
      CHECK(rel_err((*grad)[i], numeric) < 1e-6);
    }
  }
}

TEST_CASE("backward requires a scalar root and runs once per tape") {
  Tensor x({2}, {1.0, 2.0});
  x.requires_grad = true;
  Tape t;
  Value v = t.leaf(x);
  CHECK_THROWS_AS(t.backward(v), StateError);  // non-scalar root
  Value s = t.sum(v);
  t.backward(s);
  CHECK_THROWS_AS(t.backward(s), StateError);  // second sweep
  t.reset();
  CHECK(t.node_count() == 0);
}

TEST_CASE("leaf gradients accumulate across tapes until zero_grad") {
  Tensor x({2}, {3.0, 4.0});
  x.requires_grad = true;
  for (int pass = 0; pass < 2; ++pass) {
    Tape t;
    t.backward(t.sum(t.mul(t.leaf(x), t.leaf(x))));
  }
  CHECK(x.grad == std::vector<double>{12.0, 16.0});  // 2 * (2x)
  x.zero_grad();
  CHECK(x.grad == std::vector<double>{0.0, 0.0});
}

TEST_CASE("values from a foreign tape are rejected") {
  Tape t1, t2;
  Value a = t1.constant(Tensor::zeros({1}));
  Value b = t2.constant(Tensor::zeros({1}));
  CHECK_THROWS_AS(t1.add(a, b), StateError);
  CHECK_THROWS_AS(t1.add(a, Value{}), StateError);
}

TEST_CASE("non-finite op results are rejected at creation") {
  Tape t;
  CHECK_THROWS_AS(t.constant(Tensor({1}, {std::nan("")})), NumericError);
  Value big = t.constant(Tensor({1}, {1e308}));
  CHECK_THROWS_AS(t.mul(big, big), NumericError);
}

}  // TEST_SUITE
