#include "fsnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>

#include "fsnn/rng.hpp"

namespace fsnn {

namespace {

// Backward over the layer DAG. grads[i] = dLoss/d(out of layer i); the
// residual edge accumulates into its source, everything else chains.
struct BackState {
  std::vector<Tensor> grads;  // one per layer output
  Tensor dinput;              // gradient wrt model input (unused, kept simple)
};

void backward_layer(const Layer& l, const Tensor& in, const Tensor& out, const Tensor& gout,
                    Tensor& gin, Tensor* dw, Tensor* db) {
  switch (l.kind) {
    case LayerKind::Linear: {
      const uint32_t I = l.weight.dim(0), O = l.weight.dim(1);
      for (uint32_t i = 0; i < I; ++i) {
        float acc = 0.0f;
        const float* wrow = l.weight.data.data() + static_cast<size_t>(i) * O;
        float* dwrow = dw->data.data() + static_cast<size_t>(i) * O;
        for (uint32_t o = 0; o < O; ++o) {
          acc += gout[o] * wrow[o];
          dwrow[o] += in[i] * gout[o];
        }
        gin[i] += acc;
      }
      for (uint32_t o = 0; o < O; ++o) db->data[o] += gout[o];
      break;
    }
    case LayerKind::Conv2d: {
      const uint32_t oc_n = l.weight.dim(0), ic_n = l.weight.dim(1), kh = l.weight.dim(2),
                     kw = l.weight.dim(3);
      const uint32_t ih = in.dim(1), iw = in.dim(2);
      const uint32_t oh = out.dim(1), ow = out.dim(2);
      for (uint32_t oc = 0; oc < oc_n; ++oc) {
        const float* wc = l.weight.data.data() + static_cast<size_t>(oc) * ic_n * kh * kw;
        float* dwc = dw->data.data() + static_cast<size_t>(oc) * ic_n * kh * kw;
        for (uint32_t oy = 0; oy < oh; ++oy) {
          for (uint32_t ox = 0; ox < ow; ++ox) {
            const float g = gout[(static_cast<size_t>(oc) * oh + oy) * ow + ox];
            if (g == 0.0f) continue;
            db->data[oc] += g;
            const int iy0 = static_cast<int>(oy * l.stride) - static_cast<int>(l.pad);
            const int ix0 = static_cast<int>(ox * l.stride) - static_cast<int>(l.pad);
            size_t widx = 0;
            for (uint32_t ic = 0; ic < ic_n; ++ic) {
              for (uint32_t ky = 0; ky < kh; ++ky) {
                const int iy = iy0 + static_cast<int>(ky);
                for (uint32_t kx = 0; kx < kw; ++kx, ++widx) {
                  const int ix = ix0 + static_cast<int>(kx);
                  if (iy < 0 || iy >= static_cast<int>(ih) || ix < 0 ||
                      ix >= static_cast<int>(iw))
                    continue;
                  const size_t iidx =
                      (static_cast<size_t>(ic) * ih + static_cast<size_t>(iy)) * iw +
                      static_cast<size_t>(ix);
                  dwc[widx] += g * in[iidx];
                  gin[iidx] += g * wc[widx];
                }
              }
            }
          }
        }
      }
      break;
    }
    case LayerKind::BatchNorm2dFolded: {
      const uint32_t c = in.dim(0);
      const size_t plane = static_cast<size_t>(in.dim(1)) * in.dim(2);
      for (uint32_t ch = 0; ch < c; ++ch) {
        float dsc = 0.0f, dsh = 0.0f;
        const size_t base = ch * plane;
        for (size_t i = 0; i < plane; ++i) {
          const float g = gout[base + i];
          dsc += g * in[base + i];
          dsh += g;
          gin[base + i] += g * l.weight.data[ch];
        }
        dw->data[ch] += dsc;
        db->data[ch] += dsh;
      }
      break;
    }
    case LayerKind::ReLU:
      for (size_t i = 0; i < in.numel(); ++i)
        if (in[i] > 0.0f) gin[i] += gout[i];
      break;
    case LayerKind::ReLU6:
      for (size_t i = 0; i < in.numel(); ++i)
        if (in[i] > 0.0f && in[i] < 6.0f) gin[i] += gout[i];
      break;
    case LayerKind::ClippedReLU:
      for (size_t i = 0; i < in.numel(); ++i)
        if (in[i] > 0.0f && in[i] < l.tau) gin[i] += gout[i];
      break;
    case LayerKind::MaxPool2d: {
      const uint32_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
      const uint32_t oh = out.dim(1), ow = out.dim(2);
      for (uint32_t ch = 0; ch < c; ++ch) {
        const float* plane = in.data.data() + static_cast<size_t>(ch) * h * w;
        float* gplane = gin.data.data() + static_cast<size_t>(ch) * h * w;
        for (uint32_t oy = 0; oy < oh; ++oy) {
          for (uint32_t ox = 0; ox < ow; ++ox) {
            // first max in (ky,kx) scan order gets the gradient
            float best = -std::numeric_limits<float>::infinity();
            uint32_t by = 0, bx = 0;
            for (uint32_t ky = 0; ky < l.k; ++ky) {
              for (uint32_t kx = 0; kx < l.k; ++kx) {
                const float v = plane[(oy * l.s + ky) * w + ox * l.s + kx];
                if (v > best) {
                  best = v;
                  by = ky;
                  bx = kx;
                }
              }
            }
            gplane[(oy * l.s + by) * w + ox * l.s + bx] +=
                gout[(static_cast<size_t>(ch) * oh + oy) * ow + ox];
          }
        }
      }
      break;
    }
    case LayerKind::AvgPool2d: {
      const uint32_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
      const uint32_t oh = out.dim(1), ow = out.dim(2);
      const float inv = 1.0f / static_cast<float>(l.k * l.k);
      for (uint32_t ch = 0; ch < c; ++ch) {
        float* gplane = gin.data.data() + static_cast<size_t>(ch) * h * w;
        for (uint32_t oy = 0; oy < oh; ++oy) {
          for (uint32_t ox = 0; ox < ow; ++ox) {
            const float g = gout[(static_cast<size_t>(ch) * oh + oy) * ow + ox] * inv;
            for (uint32_t ky = 0; ky < l.k; ++ky)
              for (uint32_t kx = 0; kx < l.k; ++kx)
                gplane[(oy * l.s + ky) * w + ox * l.s + kx] += g;
          }
        }
      }
      break;
    }
    case LayerKind::Flatten:
      for (size_t i = 0; i < in.numel(); ++i) gin[i] += gout[i];
      break;
    case LayerKind::ResidualAdd:
      // d/d(in) handled here; d/d(src) accumulated by the caller
      for (size_t i = 0; i < in.numel(); ++i) gin[i] += gout[i];
      break;
    case LayerKind::RangeRestrict:
      fail(Err::NonDifferentiable, "RangeRestrict has no training path");
  }
}

void check_differentiable(const Model& m) {
  for (const Layer& l : m.layers)
    check(l.kind != LayerKind::RangeRestrict, Err::NonDifferentiable,
          "model contains non-differentiable layer '" + l.name + "' (RangeRestrict)");
}

}  // namespace

// Seeds the output-gradient for one sample and adds its loss contribution.
using LossSeed = std::function<void(uint32_t sample, const Tensor& logits, Tensor& glogits,
                                    double& loss)>;

static Gradients backward_batch(const Model& m, const Tensor& batch, const LossSeed& seed) {
  check_differentiable(m);
  Gradients g;
  g.dw.reserve(m.layers.size());
  g.db.reserve(m.layers.size());
  for (const Layer& l : m.layers) {
    g.dw.push_back(l.weight.numel() ? Tensor(l.weight.shape) : Tensor());
    g.db.push_back(l.bias.numel() ? Tensor(l.bias.shape) : Tensor());
  }

  const uint32_t n = batch.dim(0);
  Workspace ws;
  auto shapes = m.layer_shapes();
  std::vector<Tensor> grads(m.layers.size());
  Tensor x({batch.dim(1), batch.dim(2), batch.dim(3)});
  Tensor gin_input(x.shape);
  const size_t per = batch.numel() / n;

  for (uint32_t s = 0; s < n; ++s) {
    std::memcpy(x.data.data(), batch.data.data() + static_cast<size_t>(s) * per,
                per * sizeof(float));
    const Tensor& logits = forward_sample(m, x, ws);

    for (size_t i = 0; i < m.layers.size(); ++i) {
      if (grads[i].shape != shapes[i]) grads[i] = Tensor(shapes[i]);
      std::fill(grads[i].data.begin(), grads[i].data.end(), 0.0f);
    }
    seed(s, logits, grads.back(), g.loss);

    std::fill(gin_input.data.begin(), gin_input.data.end(), 0.0f);
    for (size_t li = m.layers.size(); li-- > 0;) {
      const Layer& l = m.layers[li];
      const Tensor& in = li == 0 ? x : ws.outs[li - 1];
      Tensor& gin = li == 0 ? gin_input : grads[li - 1];
      backward_layer(l, in, ws.outs[li], grads[li], gin,
                     g.dw[li].numel() ? &g.dw[li] : nullptr,
                     g.db[li].numel() ? &g.db[li] : nullptr);
      if (l.kind == LayerKind::ResidualAdd && l.src >= 0) {
        Tensor& gsrc = grads[static_cast<size_t>(l.src)];
        for (size_t i = 0; i < gsrc.numel(); ++i) gsrc[i] += grads[li][i];
      }
    }
  }
  return g;
}

Gradients compute_gradients(const Model& m, const Tensor& batch,
                            const std::vector<uint32_t>& labels) {
  check(batch.rank() == 4 && batch.dim(0) == labels.size(), Err::ShapeMismatch,
        "batch/label count mismatch");
  const uint32_t classes = m.meta.class_count;
  const float inv_n = 1.0f / static_cast<float>(batch.dim(0));
  return backward_batch(
      m, batch,
      [&](uint32_t s, const Tensor& logits, Tensor& glogits, double& loss) {
        float mx = -std::numeric_limits<float>::infinity();
        for (uint32_t i = 0; i < classes; ++i) mx = mx > logits[i] ? mx : logits[i];
        double sum = 0.0;
        for (uint32_t i = 0; i < classes; ++i)
          sum += std::exp(static_cast<double>(logits[i] - mx));
        const double logz = std::log(sum) + mx;
        loss += (logz - logits[labels[s]]) * inv_n;
        for (uint32_t i = 0; i < classes; ++i) {
          const float p = static_cast<float>(std::exp(static_cast<double>(logits[i]) - logz));
          glogits[i] = (p - (i == labels[s] ? 1.0f : 0.0f)) * inv_n;
        }
      });
}

static Gradients regression_gradients(const Model& m, const Tensor& batch,
                                      const Tensor& targets) {
  const uint32_t outs = targets.dim(1);
  const float inv_n = 1.0f / static_cast<float>(batch.dim(0));
  return backward_batch(
      m, batch,
      [&](uint32_t s, const Tensor& logits, Tensor& glogits, double& loss) {
        for (uint32_t i = 0; i < outs; ++i) {
          const float d = logits[i] - targets[static_cast<size_t>(s) * outs + i];
          loss += static_cast<double>(d) * d * inv_n;
          glogits[i] = 2.0f * d * inv_n;
        }
      });
}

double mean_loss(const Model& m, const Dataset& ds) {
  check(ds.size() > 0, Err::EmptyDataset, "loss over empty dataset");
  Workspace ws;
  Tensor x({ds.images.dim(1), ds.images.dim(2), ds.images.dim(3)});
  const size_t per = ds.images.numel() / ds.images.dim(0);
  double total = 0.0;
  for (size_t s = 0; s < ds.size(); ++s) {
    std::memcpy(x.data.data(), ds.images.data.data() + s * per, per * sizeof(float));
    const Tensor& logits = forward_sample(m, x, ws);
    float mx = -std::numeric_limits<float>::infinity();
    for (uint32_t i = 0; i < m.meta.class_count; ++i) mx = mx > logits[i] ? mx : logits[i];
    double sum = 0.0;
    for (uint32_t i = 0; i < m.meta.class_count; ++i)
      sum += std::exp(static_cast<double>(logits[i] - mx));
    total += std::log(sum) + mx - logits[ds.labels[s]];
  }
  return total / static_cast<double>(ds.size());
}

Model train(const Model& m, const Dataset& ds, const TrainHyper& hyper) {
  check_differentiable(m);
  ds.validate();
  Model out = m;
  if (hyper.epochs == 0) return out;

  Rng rng(hyper.seed ^ 0x7261696e5f736764ull);
  std::vector<uint32_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0u);

  const uint32_t bs = hyper.batch_size == 0 ? 1 : hyper.batch_size;
  const size_t per = ds.images.numel() / ds.images.dim(0);
  float lr = hyper.lr;

  for (uint32_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += bs) {
      const size_t cur = std::min(static_cast<size_t>(bs), order.size() - start);
      Tensor batch({static_cast<uint32_t>(cur), ds.images.dim(1), ds.images.dim(2),
                    ds.images.dim(3)});
      std::vector<uint32_t> labels(cur);
      for (size_t i = 0; i < cur; ++i) {
        const uint32_t idx = order[start + i];
        std::memcpy(batch.data.data() + i * per, ds.images.data.data() + idx * per,
                    per * sizeof(float));
        labels[i] = ds.labels[idx];
      }
      Gradients g = compute_gradients(out, batch, labels);
      for (size_t li = 0; li < out.layers.size(); ++li) {
        Layer& l = out.layers[li];
        for (size_t i = 0; i < l.weight.numel(); ++i) l.weight[i] -= lr * g.dw[li][i];
        for (size_t i = 0; i < l.bias.numel(); ++i) l.bias[i] -= lr * g.db[li][i];
      }
    }
    lr *= hyper.lr_decay;
  }
  return out;
}

Model train_regression(const Model& m, const Tensor& inputs, const Tensor& targets,
                       const TrainHyper& hyper) {
  check_differentiable(m);
  check(inputs.rank() == 4 && targets.rank() == 2 && inputs.dim(0) == targets.dim(0),
        Err::ShapeMismatch, "inputs N x C x H x W and targets N x outputs required");
  Model out = m;
  if (hyper.epochs == 0) return out;

  Rng rng(hyper.seed ^ 0x7265677265737ull);
  std::vector<uint32_t> order(inputs.dim(0));
  std::iota(order.begin(), order.end(), 0u);
  const uint32_t bs = hyper.batch_size == 0 ? 1 : hyper.batch_size;
  const size_t per = inputs.numel() / inputs.dim(0);
  const uint32_t outs = targets.dim(1);
  float lr = hyper.lr;

  for (uint32_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += bs) {
      const size_t cur = std::min(static_cast<size_t>(bs), order.size() - start);
      Tensor batch({static_cast<uint32_t>(cur), inputs.dim(1), inputs.dim(2), inputs.dim(3)});
      Tensor tgt({static_cast<uint32_t>(cur), outs});
      for (size_t i = 0; i < cur; ++i) {
        const uint32_t idx = order[start + i];
        std::memcpy(batch.data.data() + i * per, inputs.data.data() + idx * per,
                    per * sizeof(float));
        std::memcpy(tgt.data.data() + i * outs,
                    targets.data.data() + static_cast<size_t>(idx) * outs,
                    outs * sizeof(float));
      }
      Gradients g = regression_gradients(out, batch, tgt);
      for (size_t li = 0; li < out.layers.size(); ++li) {
        Layer& l = out.layers[li];
        for (size_t i = 0; i < l.weight.numel(); ++i) l.weight[i] -= lr * g.dw[li][i];
        for (size_t i = 0; i < l.bias.numel(); ++i) l.bias[i] -= lr * g.db[li][i];
      }
    }
    lr *= hyper.lr_decay;
  }
  return out;
}

double mean_squared_error(const Model& m, const Tensor& inputs, const Tensor& targets) {
  Workspace ws;
  const uint32_t n = inputs.dim(0), outs = targets.dim(1);
  Tensor x({inputs.dim(1), inputs.dim(2), inputs.dim(3)});
  const size_t per = inputs.numel() / n;
  double total = 0.0;
  for (uint32_t s = 0; s < n; ++s) {
    std::memcpy(x.data.data(), inputs.data.data() + static_cast<size_t>(s) * per,
                per * sizeof(float));
    const Tensor& logits = forward_sample(m, x, ws);
    for (uint32_t i = 0; i < outs; ++i) {
      const double d = logits[i] - targets[static_cast<size_t>(s) * outs + i];
      total += d * d;
    }
  }
  return total / n;
}

}  // namespace fsnn
