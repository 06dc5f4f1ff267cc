#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdd/dataset.hpp"
#include "sdd/error.hpp"
#include "sdd/mlp.hpp"
#include "sdd/train.hpp"

using namespace sdd;

namespace {

OptimizerPolicy blob_policy() {
  OptimizerPolicy p;
  p.base_lr = 0.1;
  p.momentum = 0.9;
  p.milestones = {};
  p.epochs = 30;
  p.batch_size = 16;
  return p;
}

MlpModel scalar_model(double w0, double b0) {
  MlpModel m = build_mlp(1, {}, 1, 1);
  m.layers[0].weight.data[0] = w0;
  m.layers[0].bias.data[0] = b0;
  return m;
}

void set_grads(MlpModel& m, double gw, double gb) {
  for (auto& layer : m.layers) {
    layer.weight.ensure_grad();
    layer.bias.ensure_grad();
    for (auto& g : layer.weight.grad) g = gw;
    for (auto& g : layer.bias.grad) g = gb;
  }
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("lr decays by the decay factor at each milestone") {
  OptimizerPolicy p;  // base 0.1, decay 0.1, milestones {80, 120}
  CHECK(lr_at(p, 0) == 0.1);
  CHECK(lr_at(p, 79) == 0.1);
  CHECK(lr_at(p, 80) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(lr_at(p, 119) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(lr_at(p, 120) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(lr_at(p, 1000) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK_THROWS_AS(lr_at(p, -1), InputError);
}

TEST_CASE("policy validation rejects out-of-range fields") {
  OptimizerPolicy p;
  CHECK_NOTHROW(p.validate());
  auto bad = [&](auto mutate) {
    OptimizerPolicy q;
    mutate(q);
    CHECK_THROWS_AS(q.validate(), InputError);
  };
  bad([](OptimizerPolicy& q) { q.base_lr = 0.0; });
  bad([](OptimizerPolicy& q) { q.momentum = 1.0; });
  bad([](OptimizerPolicy& q) { q.momentum = -0.1; });
  bad([](OptimizerPolicy& q) { q.decay_factor = 0.0; });
  bad([](OptimizerPolicy& q) { q.epochs = -1; });
  bad([](OptimizerPolicy& q) { q.batch_size = 0; });
  bad([](OptimizerPolicy& q) { q.milestones = {120, 80}; });
}

TEST_CASE("kd config validation ties the teacher path to alpha") {
  KdConfig kd;
  CHECK_NOTHROW(kd.validate());
  kd.alpha = 1.2;
  CHECK_THROWS_AS(kd.validate(), InputError);
  kd.alpha = 0.5;
  CHECK_THROWS_AS(kd.validate(), InputError);  // alpha > 0 without a teacher
  kd.teacher_checkpoint = "teacher.ckpt";
  CHECK_NOTHROW(kd.validate());
  kd.tau = 0.0;
  CHECK_THROWS_AS(kd.validate(), InputError);
}

TEST_CASE("two momentum steps move a weight by -2.9 lr g") {
  MlpModel m = scalar_model(1.0, 0.0);
  SgdState st = SgdState::zeros_like(m);
  OptimizerPolicy p = blob_policy();
  double g = 0.25;
  set_grads(m, g, 0.0);
  sgd_step(m, st, p, 0);
  CHECK(m.layers[0].weight.data[0] ==
        doctest::Approx(1.0 - 0.1 * g).epsilon(1e-15));
  set_grads(m, g, 0.0);
  sgd_step(m, st, p, 0);
  CHECK(m.layers[0].weight.data[0] ==
        doctest::Approx(1.0 - 2.9 * 0.1 * g).epsilon(1e-14));
}

TEST_CASE("weight decay couples into the gradient; biases are exempt") {
  MlpModel m = scalar_model(1.0, 0.3);
  SgdState st = SgdState::zeros_like(m);
  OptimizerPolicy p = blob_policy();
  p.lambda_l2 = 0.01;
  set_grads(m, 0.0, 0.0);
  sgd_step(m, st, p, 0);
  CHECK(m.layers[0].weight.data[0] ==
        doctest::Approx(1.0 - 0.1 * 0.01).epsilon(1e-15));
  CHECK(m.layers[0].bias.data[0] == 0.3);  // no decay ever reaches biases
}

TEST_CASE("masked coordinates stay bitwise zero through updates") {
  MlpModel m = build_mlp(2, {}, 2, 3);
  m.layers[0].mask.data = {1.0, 0.0, 1.0, 1.0};
  m.layers[0].weight.data[1] = 0.0;
  SgdState st = SgdState::zeros_like(m);
  OptimizerPolicy p = blob_policy();
  p.lambda_l2 = 0.01;
  for (int step = 0; step < 3; ++step) {
    set_grads(m, 1.0, 0.0);  // gradient leaks onto the masked slot too
    sgd_step(m, st, p, step);
  }
  CHECK(m.layers[0].weight.data[1] == 0.0);
  CHECK(st.vel_w[0][1] == 0.0);
  CHECK(m.layers[0].weight.data[0] != 0.0);
}

TEST_CASE("sgd_step demands populated gradients") {
  MlpModel m = scalar_model(1.0, 0.0);
  SgdState st = SgdState::zeros_like(m);
  OptimizerPolicy p = blob_policy();
  CHECK_THROWS_AS(sgd_step(m, st, p, 0), StateError);
}

TEST_CASE("total_loss with alpha 0 is exactly the cross-entropy node") {
  Tensor logits({2, 3}, {0.5, -0.2, 0.1, 1.0, 0.0, -1.0});
  std::vector<int> targets = {2, 0};
  double ce;
  {
    Tape t;
    ce = t.softmax_cross_entropy(t.constant(logits), targets).scalar();
  }
  Tape t;
  Value node = t.constant(logits);
  size_t before = t.node_count();
  KdConfig kd;
  Value loss = total_loss(t, node, targets, nullptr, kd);
  CHECK(t.node_count() == before + 1);  // the CE node and nothing else
  CHECK(loss.scalar() == ce);
}

TEST_CASE("total_loss blends teacher and label terms by alpha") {
  Tensor st_logits({1, 3}, {0.2, -0.4, 0.9});
  Tensor te_logits({1, 3}, {1.5, 0.0, -0.5});
  std::vector<int> targets = {1};
  KdConfig kd;
  kd.alpha = 0.3;
  kd.tau = 2.0;
  kd.teacher_checkpoint = "x";
  double ce, kl;
  {
    Tape t;
    ce = t.softmax_cross_entropy(t.constant(st_logits), targets).scalar();
    kl = t.kl_divergence_loss(t.constant(st_logits), t.constant(te_logits),
                              kd.tau).scalar();
  }
  Tape t;
  Value s = t.constant(st_logits);
  Value te = t.constant(te_logits);
  Value loss = total_loss(t, s, targets, &te, kd);
  CHECK(loss.scalar() ==
        doctest::Approx(0.7 * ce + 0.3 * kl).epsilon(1e-13));
  CHECK_THROWS_AS(total_loss(t, s, targets, nullptr, kd), InputError);
}

TEST_CASE("evaluation breaks argmax ties toward the lowest class") {
  LabeledDataset ds = synth_blobs(3, 20, 4, 0.2, 8);
  MlpModel m = build_mlp(4, {}, 3, 1);
  for (auto& w : m.layers[0].weight.data) w = 0.0;
  EvalResult r = evaluate_metrics(m, ds, LabelSource::kNoisy);
  CHECK(r.accuracy == doctest::Approx(20.0 / 60.0).epsilon(1e-15));
  CHECK(r.ce_loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(evaluate(m, ds, LabelSource::kNoisy) == r.accuracy);
}

TEST_CASE("evaluation can score against clean or noisy labels") {
  LabeledDataset ds;
  ds.inputs = Tensor::zeros({10, 2});
  ds.class_count = 3;
  ds.labels.assign(10, 0);
  ds.clean_labels = ds.labels;
  LabeledDataset noisy = inject_symmetric_noise(ds, {0.3, 5});
  MlpModel m = build_mlp(2, {}, 3, 1);
  for (auto& w : m.layers[0].weight.data) w = 0.0;  // always predicts class 0
  CHECK(evaluate(m, noisy, LabelSource::kClean) == 1.0);
  CHECK(evaluate(m, noisy, LabelSource::kNoisy) ==
        doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("training separates gaussian blobs") {
  LabeledDataset ds = synth_blobs(3, 60, 6, 0.08, 4);
  MlpModel m = build_mlp(6, {16}, 3, 11);
  auto metrics = train(m, ds, nullptr, &ds, blob_policy(), {}, nullptr, 21);
  REQUIRE(metrics.size() == 30);
  CHECK(metrics.back().train_accuracy >= 0.99);
  CHECK(metrics.back().test_accuracy >= 0.99);
  CHECK(metrics.back().train_loss < 0.1);
  for (size_t i = 0; i < metrics.size(); ++i) {
    CHECK(metrics[i].epoch == int(i));
    CHECK(metrics[i].lr_used == lr_at(blob_policy(), int(i)));
    CHECK(std::isnan(metrics[i].val_accuracy));  // no val set supplied
  }
}

TEST_CASE("training is bitwise deterministic in the run seed") {
  LabeledDataset ds = synth_blobs(3, 30, 5, 0.1, 6);
  OptimizerPolicy p = blob_policy();
  p.epochs = 5;
  auto weights_after = [&](uint64_t run_seed) {
    MlpModel m = build_mlp(5, {8}, 3, 77);
    train(m, ds, nullptr, nullptr, p, {}, nullptr, run_seed);
    return m.layers[0].weight.data;
  };
  CHECK(weights_after(1) == weights_after(1));
  CHECK(weights_after(1) != weights_after(2));  // shuffle order differs
}

TEST_CASE("zero epochs leave the model untouched") {
  LabeledDataset ds = synth_blobs(2, 10, 3, 0.1, 2);
  MlpModel m = build_mlp(3, {}, 2, 9);
  std::vector<double> before = m.layers[0].weight.data;
  OptimizerPolicy p = blob_policy();
  p.epochs = 0;
  CHECK(train(m, ds, nullptr, nullptr, p, {}, nullptr, 1).empty());
  CHECK(m.layers[0].weight.data == before);
}

TEST_CASE("a diverging loss aborts with a numeric error") {
  LabeledDataset ds = synth_blobs(3, 30, 5, 0.1, 6);
  MlpModel m = build_mlp(5, {8}, 3, 77);
  OptimizerPolicy p = blob_policy();
  // Saturated cross-entropy keeps plain gradients bounded, so couple the
  // decay term in: each step then scales the weights by about lr * lambda.
  p.base_lr = 1e15;
  p.lambda_l2 = 1.0;
  p.epochs = 10;
  CHECK_THROWS_AS(train(m, ds, nullptr, nullptr, p, {}, nullptr, 1),
                  NumericError);
}

TEST_CASE("train enforces the teacher/alpha pairing") {
  LabeledDataset ds = synth_blobs(2, 10, 3, 0.1, 2);
  MlpModel m = build_mlp(3, {}, 2, 9);
  OptimizerPolicy p = blob_policy();
  p.epochs = 1;
  KdConfig kd;
  kd.alpha = 0.5;
  kd.tau = 4.0;
  kd.teacher_checkpoint = "x";
  CHECK_THROWS_AS(train(m, ds, nullptr, nullptr, p, kd, nullptr, 1),
                  InputError);
}

TEST_CASE("distillation against a trained teacher still learns") {
  LabeledDataset ds = synth_blobs(3, 60, 6, 0.08, 4);
  MlpModel teacher = build_mlp(6, {16}, 3, 11);
  train(teacher, ds, nullptr, nullptr, blob_policy(), {}, nullptr, 21);
  KdConfig kd;
  kd.alpha = 0.9;
  kd.tau = 4.0;
  kd.teacher_checkpoint = "x";
  MlpModel student = build_mlp(6, {16}, 3, 12);
  auto metrics =
      train(student, ds, nullptr, nullptr, blob_policy(), kd, &teacher, 22);
  CHECK(metrics.back().train_accuracy >= 0.95);
  // The blend must actually change the optimization trajectory.
  MlpModel plain = build_mlp(6, {16}, 3, 12);
  train(plain, ds, nullptr, nullptr, blob_policy(), {}, nullptr, 22);
  CHECK(plain.layers[0].weight.data != student.layers[0].weight.data);
}

}  // TEST_SUITE
