#include <doctest.h>

#include <cmath>

#include "fsnn/rng.hpp"
#include "fsnn/train.hpp"

using namespace fsnn;

TEST_CASE("zero epochs returns the model unchanged bit for bit") {
  Model m = build_model("micro-conv", 3);
  Rng rng(1);
  Dataset ds;
  ds.images = Tensor({4, 1, 28, 28});
  for (auto& v : ds.images.data) v = static_cast<float>(rng.uniform(0, 1));
  ds.labels = {0, 1, 2, 3};
  ds.class_count = 10;
  TrainHyper h;
  h.epochs = 0;
  Model out = train(m, ds, h);
  CHECK(out.weights_hash() == m.weights_hash());
}

TEST_CASE("y = 2x regression recovers the closed-form least-squares weight") {
  Rng rng(7);
  Model m;
  m.meta.input_shape = {1, 1, 1};
  m.meta.class_count = 1;
  m.layers.push_back(make_flatten("f"));
  m.layers.push_back(make_linear("fc", 1, 1));
  m.validate();

  const uint32_t n = 64;
  Tensor inputs({n, 1, 1, 1});
  Tensor targets({n, 1});
  for (uint32_t i = 0; i < n; ++i) {
    const float x = static_cast<float>(rng.uniform(-1, 1));
    inputs.data[i] = x;
    targets.data[i] = 2.0f * x;  // exact line; least-squares optimum is w=2, b=0
  }
  TrainHyper h;
  h.lr = 0.3f;
  h.epochs = 200;
  h.batch_size = 16;
  h.seed = 3;
  Model out = train_regression(m, inputs, targets, h);
  CHECK(mean_squared_error(out, inputs, targets) <
        mean_squared_error(m, inputs, targets));
  CHECK(std::fabs(out.layers[1].weight.data[0] - 2.0f) < 1e-3f);
  CHECK(std::fabs(out.layers[1].bias.data[0]) < 1e-3f);
}

TEST_CASE("gradients match central finite differences on a 3-layer micro-net") {
  Rng rng(11);
  Model m;
  m.meta.input_shape = {1, 6, 6};
  m.meta.class_count = 3;
  m.layers.push_back(make_conv2d("c", 1, 2, 3, 1, 1));  // 2x6x6
  m.layers.push_back(make_act("r", LayerKind::ReLU));
  m.layers.push_back(make_pool("p", LayerKind::MaxPool2d, 2, 2));  // 2x3x3
  m.layers.push_back(make_flatten("f"));
  m.layers.push_back(make_linear("fc", 18, 3));
  for (auto& v : m.layers[0].weight.data) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  for (auto& v : m.layers[4].weight.data) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  for (auto& v : m.layers[0].bias.data) v = static_cast<float>(rng.uniform(-0.1, 0.1));
  m.validate();

  Tensor batch({4, 1, 6, 6});
  for (auto& v : batch.data) v = static_cast<float>(rng.uniform(-1, 1));
  std::vector<uint32_t> labels = {0, 1, 2, 1};

  Dataset ds;
  ds.images = batch;
  ds.labels = labels;
  ds.class_count = 3;

  Gradients g = compute_gradients(m, batch, labels);

  const double eps = 1e-3;
  double max_rel = 0.0;
  size_t checked = 0;
  for (size_t li = 0; li < m.layers.size(); ++li) {
    for (int which = 0; which < 2; ++which) {
      Tensor& param = which == 0 ? m.layers[li].weight : m.layers[li].bias;
      const Tensor& grad = which == 0 ? g.dw[li] : g.db[li];
      for (size_t i = 0; i < param.numel(); ++i) {
        const float saved = param[i];
        param[i] = saved + static_cast<float>(eps);
        const double lp = mean_loss(m, ds);
        param[i] = saved - static_cast<float>(eps);
        const double lm = mean_loss(m, ds);
        param[i] = saved;
        const double fd = (lp - lm) / (2 * eps);
        const double an = grad[i];
        const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-4});
        max_rel = std::max(max_rel, std::fabs(fd - an) / denom);
        ++checked;
      }
    }
  }
  CHECK(checked > 50);
  CHECK(max_rel < 1e-2);
}

TEST_CASE("training is deterministic given the seed") {
  Rng rng(2);
  Model m = build_model("micro-conv", 21);
  Dataset ds;
  ds.images = Tensor({64, 1, 28, 28});
  for (auto& v : ds.images.data) v = static_cast<float>(rng.uniform(0, 1));
  ds.labels.resize(64);
  for (auto& l : ds.labels) l = static_cast<uint32_t>(rng.below(10));
  ds.class_count = 10;
  TrainHyper h;
  h.epochs = 2;
  h.seed = 77;
  Model a = train(m, ds, h);
  Model b = train(m, ds, h);
  CHECK(a.weights_hash() == b.weights_hash());
  h.seed = 78;
  Model c = train(m, ds, h);
  CHECK(a.weights_hash() != c.weights_hash());
}

TEST_CASE("non-differentiable layer rejects training") {
  Model m;
  m.meta.input_shape = {4};
  m.meta.class_count = 4;
  m.layers.push_back(make_range_restrict("g", 0.0f, 1.0f));
  m.validate();
  Dataset ds;
  ds.images = Tensor({1, 1, 2, 2});
  ds.labels = {0};
  ds.class_count = 4;
  TrainHyper h;
  h.epochs = 1;
  CHECK_THROWS_AS(train(m, ds, h), Error);
  try {
    train(m, ds, h);
  } catch (const Error& e) {
    CHECK(e.code() == Err::NonDifferentiable);
  }
}

TEST_CASE("gradient flows through residual adds") {
  Rng rng(31);
  Model m;
  m.meta.input_shape = {2, 4, 4};
  m.meta.class_count = 2;
  m.layers.push_back(make_conv2d("c1", 2, 2, 3, 1, 1));  // 0
  m.layers.push_back(make_act("r1", LayerKind::ReLU));   // 1
  m.layers.push_back(make_conv2d("c2", 2, 2, 3, 1, 1));  // 2
  m.layers.push_back(make_residual_add("res", -1));      // 3: + model input
  m.layers.push_back(make_flatten("f"));                 // 4
  m.layers.push_back(make_linear("fc", 32, 2));          // 5
  for (auto& v : m.layers[0].weight.data) v = static_cast<float>(rng.uniform(-0.4, 0.4));
  for (auto& v : m.layers[2].weight.data) v = static_cast<float>(rng.uniform(-0.4, 0.4));
  for (auto& v : m.layers[5].weight.data) v = static_cast<float>(rng.uniform(-0.4, 0.4));
  m.validate();

  Tensor batch({2, 2, 4, 4});
  for (auto& v : batch.data) v = static_cast<float>(rng.uniform(-1, 1));
  std::vector<uint32_t> labels = {0, 1};
  Dataset ds;
  ds.images = batch;
  ds.labels = labels;
  ds.class_count = 2;

  Gradients g = compute_gradients(m, batch, labels);
  const double eps = 1e-3;
  // spot-check the first conv's first few weights through the skip path
  for (size_t i = 0; i < 5; ++i) {
    const float saved = m.layers[0].weight[i];
    m.layers[0].weight[i] = saved + static_cast<float>(eps);
    const double lp = mean_loss(m, ds);
    m.layers[0].weight[i] = saved - static_cast<float>(eps);
    const double lm = mean_loss(m, ds);
    m.layers[0].weight[i] = saved;
    const double fd = (lp - lm) / (2 * eps);
    const double an = g.dw[0][i];
    const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-4});
    CHECK(std::fabs(fd - an) / denom < 1e-2);
  }
}
