// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>

#include "onedatum/core/hash.hpp"
#include "onedatum/modelzoo/modelzoo.hpp"
#include "onedatum/nn/checkpoint.hpp"
#include "onedatum/nn/layers.hpp"
#include "onedatum/nn/optim.hpp"

using namespace onedatum;
using nn::Tensor;

namespace {

Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed,
                     double scale = 1.0) {
  Tensor t(n, c, h, w);
  rng::Stream rs(seed);
  for (auto& v : t.data) v = static_cast<float>(rs.normal() * scale);
  return t;
}

// Scalar loss: weighted sum of the layer output, L = sum_i w_i * y_i with
// fixed pseudo-random weights. dL/dy = w.
struct LossProbe {
  std::vector<float> w;
  explicit LossProbe(std::size_t n, std::uint64_t seed = 31337) {
    rng::Stream rs(seed);
    w.resize(n);
    for (auto& v : w) v = static_cast<float>(rs.uniform(-1.0, 1.0));
  }
  double loss(const Tensor& y) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) acc += w[i] * y.data[i];
    return acc;
  }
  Tensor grad(const Tensor& y) const {
    Tensor g = Tensor::zeros_like(y);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = w[i];
    return g;
  }
};

// Gradient validation against central finite differences in train mode.
// Two levels: per-coordinate spot checks (atol + rtol; kink-straddling
// coordinates are skipped) and directional-derivative checks over the
// input and over every parameter tensor. The directional form averages
// out float32 forward noise and fails hard on any systematic backward
// error, so it carries the tight tolerance.
void check_gradients(nn::Layer& layer, Tensor x, double rtol = 5e-2,
                     double h = 3e-3) {
  Tensor y0 = layer.forward(x, true);
  LossProbe probe(y0.numel());
  Tensor dx = layer.backward(probe.grad(y0));
  REQUIRE(dx.shape == x.shape);

  std::vector<nn::ParamRef> params;
  layer.collect_params("p", params);
  // copy analytic parameter grads before FD perturbs state
  std::vector<std::vector<float>> analytic_pgrads;
  for (auto& p : params) analytic_pgrads.push_back(p.grad->data);

  const double atol = 4e-3;
  double l0 = probe.loss(layer.forward(x, true));
  auto fd_check = [&](float* slot, double analytic) {
    float orig = *slot;
    *slot = static_cast<float>(orig + h);
    double lp = probe.loss(layer.forward(x, true));
    *slot = static_cast<float>(orig - h);
    double lm = probe.loss(layer.forward(x, true));
    *slot = orig;
    double fd = (lp - lm) / (2.0 * h);
    // a kink inside the interval makes the one-sided differences
    // disagree; such coordinates carry no usable FD estimate
    double right = (lp - l0) / h;
    double left = (l0 - lm) / h;
    if (std::abs(right - left) >
        0.1 * std::max({std::abs(fd), std::abs(analytic), 0.05})) {
      return;
    }
    double err = std::abs(fd - analytic);
    double bound = atol + rtol * std::max(std::abs(fd), std::abs(analytic));
    if (err >= bound) {
      CAPTURE(fd);
      CAPTURE(analytic);
    }
    REQUIRE(err < bound);
  };

  // spot-check a deterministic subset of input coordinates
  rng::Stream pick(777);
  for (int trial = 0; trial < 24; ++trial) {
    auto i = pick.uniform_int(static_cast<std::uint32_t>(x.numel()));
    fd_check(&x.data[i], dx.data[i]);
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    for (int trial = 0; trial < 12; ++trial) {
      auto i = pick.uniform_int(static_cast<std::uint32_t>(p.value->numel()));
      fd_check(&p.value->data[i], analytic_pgrads[pi][i]);
    }
  }

  // directional derivative over the input
  rng::Stream drs(4242);
  const double dh = 1e-3;
  {
    std::vector<float> dir(x.numel());
    for (auto& v : dir) v = static_cast<float>(drs.uniform(-1.0, 1.0));
    Tensor xp = x, xm = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
      xp.data[i] += static_cast<float>(dh) * dir[i];
      xm.data[i] -= static_cast<float>(dh) * dir[i];
    }
    double fd_dir = (probe.loss(layer.forward(xp, true)) -
                     probe.loss(layer.forward(xm, true))) /
                    (2.0 * dh);
    double an_dir = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
      an_dir += static_cast<double>(dir[i]) * dx.data[i];
    }
    REQUIRE(std::abs(fd_dir - an_dir) <
            1e-2 * std::max({std::abs(fd_dir), std::abs(an_dir), 1.0}));
  }

  // directional derivative over each parameter tensor
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    std::vector<float> dir(p.value->numel());
    for (auto& v : dir) v = static_cast<float>(drs.uniform(-1.0, 1.0));
    std::vector<float> orig = p.value->data;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      p.value->data[i] = orig[i] + static_cast<float>(dh) * dir[i];
    }
    double lp = probe.loss(layer.forward(x, true));
    for (std::size_t i = 0; i < dir.size(); ++i) {
      p.value->data[i] = orig[i] - static_cast<float>(dh) * dir[i];
    }
    double lm = probe.loss(layer.forward(x, true));
    p.value->data = orig;
    double fd_dir = (lp - lm) / (2.0 * dh);
    double an_dir = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      an_dir += static_cast<double>(dir[i]) * analytic_pgrads[pi][i];
    }
    if (std::abs(fd_dir - an_dir) >=
        1e-2 * std::max({std::abs(fd_dir), std::abs(an_dir), 1.0})) {
      CAPTURE(p.name);
      CAPTURE(fd_dir);
      CAPTURE(an_dir);
    }
    REQUIRE(std::abs(fd_dir - an_dir) <
            1e-2 * std::max({std::abs(fd_dir), std::abs(an_dir), 1.0}));
  }
}

}  // namespace

TEST_CASE("grad: conv2d stride 1 with asymmetric padding and bias") {
  nn::Conv2d conv(3, 5, 4, 1, 1, 1, 2, 0, 0, true);
  rng::Stream rs(1);
  conv.init(rs);
  for (auto& v : conv.bias.data) v = static_cast<float>(rs.normal() * 0.1);
  check_gradients(conv, random_tensor(2, 3, 7, 6, 11));
}

TEST_CASE("grad: conv2d stride 2") {
  nn::Conv2d conv(4, 6, 3, 3, 2, 1, false);
  rng::Stream rs(2);
  conv.init(rs);
  check_gradients(conv, random_tensor(2, 4, 9, 9, 12));
}

TEST_CASE("grad: linear") {
  nn::Linear fc(12, 7);
  rng::Stream rs(3);
  fc.init(rs);
  for (auto& v : fc.bias.data) v = static_cast<float>(rs.normal() * 0.1);
  check_gradients(fc, random_tensor(5, 12, 1, 1, 13));
}

TEST_CASE("grad: batchnorm train mode") {
  nn::BatchNorm2d bn(4);
  rng::Stream rs(4);
  for (auto& v : bn.gamma.data) v = static_cast<float>(1.0 + 0.2 * rs.normal());
  for (auto& v : bn.beta.data) v = static_cast<float>(0.1 * rs.normal());
  // statistics drift across FD evals is second-order; loosen slightly
  check_gradients(bn, random_tensor(3, 4, 5, 5, 14), 3e-2);
}

TEST_CASE("grad: groupnorm") {
  nn::GroupNorm gn(2, 6);
  rng::Stream rs(5);
  for (auto& v : gn.gamma.data) v = static_cast<float>(1.0 + 0.2 * rs.normal());
  for (auto& v : gn.beta.data) v = static_cast<float>(0.1 * rs.normal());
  check_gradients(gn, random_tensor(2, 6, 4, 4, 15), 3e-2);
}

TEST_CASE("grad: relu, maxpool, global pools") {
  nn::ReLU relu;
  check_gradients(relu, random_tensor(2, 3, 6, 6, 16));
  nn::MaxPool2d pool(2, 2);
  check_gradients(pool, random_tensor(2, 3, 7, 7, 17));
  nn::GlobalAvgPool gap;
  check_gradients(gap, random_tensor(2, 5, 4, 4, 18));
  nn::GlobalMaxPool gmp;
  check_gradients(gmp, random_tensor(2, 5, 4, 4, 19));
}

namespace {

// Composite blocks sit behind BatchNorm train-mode re-standardization,
// which cancels the first-order response of upstream weights and leaves
// finite differences dominated by dense ReLU kink crossings. The blocks
// are therefore validated against an explicit re-wiring of the same
// dataflow built from the FD-validated primitive layers: forwards and
// backwards must agree elementwise.
void copy_params(std::vector<nn::ParamRef>& from,
                 std::vector<nn::ParamRef>& to) {
  REQUIRE(from.size() == to.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    REQUIRE(from[i].value->shape == to[i].value->shape);
    to[i].value->data = from[i].value->data;
  }
}

void expect_close(const Tensor& a, const Tensor& b, double tol = 1e-4) {
  REQUIRE(a.shape == b.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    REQUIRE(a.data[i] == doctest::Approx(b.data[i]).epsilon(tol));
  }
}

}  // namespace

TEST_CASE("grad: basic block equals primitive-layer composition") {
  for (auto [cin, cout, stride, seed] :
       {std::tuple{4, 8, 2, 99ull}, std::tuple{6, 6, 1, 98ull}}) {
    nn::BasicBlock block(cin, cout, stride, seed);
    nn::Conv2d conv1(cin, cout, 3, 3, stride, 1, false);
    nn::BatchNorm2d bn1(cout);
    nn::Conv2d conv2(cout, cout, 3, 3, 1, 1, false);
    nn::BatchNorm2d bn2(cout);
    nn::ReLU relu1;
    bool project = stride != 1 || cin != cout;
    nn::Conv2d short_conv(cin, cout, 1, 1, stride, 0, false);
    nn::BatchNorm2d short_bn(cout);

    std::vector<nn::ParamRef> bp, rp;
    block.collect_params("b", bp);
    conv1.collect_params("r.conv1", rp);
    bn1.collect_params("r.bn1", rp);
    conv2.collect_params("r.conv2", rp);
    bn2.collect_params("r.bn2", rp);
    if (project) {
      short_conv.collect_params("r.sc", rp);
      short_bn.collect_params("r.sb", rp);
    }
    copy_params(bp, rp);

    auto x = random_tensor(2, cin, 8, 8, 20 + cin);
    Tensor y_block = block.forward(x, true);

    Tensor a = relu1.forward(bn1.forward(conv1.forward(x, true), true), true);
    Tensor b = bn2.forward(conv2.forward(a, true), true);
    Tensor s = project
                   ? short_bn.forward(short_conv.forward(x, true), true)
                   : x;
    Tensor sum = b;
    for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += s.data[i];
    Tensor y_ref = sum;
    for (auto& v : y_ref.data) v = std::max(v, 0.0f);
    expect_close(y_block, y_ref);

    Tensor dy = random_tensor(y_block.n(), y_block.c(), y_block.h(),
                              y_block.w(), 91);
    Tensor dx_block = block.backward(dy);

    Tensor dsum = dy;
    for (std::size_t i = 0; i < dsum.data.size(); ++i) {
      if (sum.data[i] <= 0.0f) dsum.data[i] = 0.0f;
    }
    Tensor dx_ref = conv1.backward(
        bn1.backward(relu1.backward(conv2.backward(bn2.backward(dsum)))));
    Tensor dshort =
        project ? short_conv.backward(short_bn.backward(dsum)) : dsum;
    for (std::size_t i = 0; i < dx_ref.data.size(); ++i) {
      dx_ref.data[i] += dshort.data[i];
    }
    expect_close(dx_block, dx_ref);

    // parameter grads agree too
    for (std::size_t i = 0; i < bp.size(); ++i) {
      expect_close(*bp[i].grad, *rp[i].grad);
    }
  }
}

TEST_CASE("grad: preact block equals primitive-layer composition") {
  for (auto [cin, cout, stride, seed] :
       {std::tuple{4, 8, 2, 97ull}, std::tuple{6, 6, 1, 96ull}}) {
    nn::PreActBlock block(cin, cout, stride, seed);
    nn::BatchNorm2d bn1(cin), bn2(cout);
    nn::ReLU relu1, relu2;
    nn::Conv2d conv1(cin, cout, 3, 3, stride, 1, false);
    nn::Conv2d conv2(cout, cout, 3, 3, 1, 1, false);
    bool equal_in_out = stride == 1 && cin == cout;
    nn::Conv2d short_conv(cin, cout, 1, 1, stride, 0, false);

    std::vector<nn::ParamRef> bp, rp;
    block.collect_params("b", bp);
    bn1.collect_params("r.bn1", rp);
    conv1.collect_params("r.conv1", rp);
    bn2.collect_params("r.bn2", rp);
    conv2.collect_params("r.conv2", rp);
    if (!equal_in_out) short_conv.collect_params("r.sc", rp);
    copy_params(bp, rp);

    auto x = random_tensor(2, cin, 8, 8, 40 + cin);
    Tensor y_block = block.forward(x, true);

    Tensor a = relu1.forward(bn1.forward(x, true), true);
    Tensor out = conv2.forward(
        relu2.forward(bn2.forward(conv1.forward(a, true), true), true), true);
    Tensor s = equal_in_out ? x : short_conv.forward(a, true);
    Tensor y_ref = out;
    for (std::size_t i = 0; i < y_ref.data.size(); ++i) {
      y_ref.data[i] += s.data[i];
    }
    expect_close(y_block, y_ref);

    Tensor dy = random_tensor(y_block.n(), y_block.c(), y_block.h(),
                              y_block.w(), 92);
    Tensor dx_block = block.backward(dy);

    Tensor da = conv1.backward(
        bn2.backward(relu2.backward(conv2.backward(dy))));
    if (!equal_in_out) {
      Tensor ds = short_conv.backward(dy);
      for (std::size_t i = 0; i < da.data.size(); ++i) {
        da.data[i] += ds.data[i];
      }
    }
    Tensor dx_ref = bn1.backward(relu1.backward(da));
    if (equal_in_out) {
      for (std::size_t i = 0; i < dx_ref.data.size(); ++i) {
        dx_ref.data[i] += dy.data[i];
      }
    }
    expect_close(dx_block, dx_ref);
    for (std::size_t i = 0; i < bp.size(); ++i) {
      expect_close(*bp[i].grad, *rp[i].grad);
    }
  }
}

TEST_CASE("grad: audio block equals primitive-layer composition") {
  const int cin = 3, cout = 8;
  nn::AudioBlock block(cin, cout, 95);
  nn::Conv2d conv_time(cin, cout, 4, 1, 1, 1, 2, 0, 0, true);
  nn::Conv2d conv_freq(cin, cout, 1, 4, 1, 0, 0, 1, 2, true);
  nn::Conv2d fuse(2 * cout, cout, 1, 1, 1, 0, true);
  nn::GroupNorm gn(8, cout);
  nn::ReLU relu;

  std::vector<nn::ParamRef> bp, rp;
  block.collect_params("b", bp);
  conv_time.collect_params("r.t", rp);
  conv_freq.collect_params("r.f", rp);
  fuse.collect_params("r.fuse", rp);
  gn.collect_params("r.gn", rp);
  copy_params(bp, rp);

  auto x = random_tensor(2, cin, 9, 8, 24);
  Tensor y_block = block.forward(x, true);

  Tensor t = conv_time.forward(x, true);
  Tensor f = conv_freq.forward(x, true);
  Tensor cat(x.n(), 2 * cout, t.h(), t.w());
  std::size_t half = static_cast<std::size_t>(cout) * t.h() * t.w();
  for (int n = 0; n < x.n(); ++n) {
    std::copy(t.sample(n), t.sample(n) + half, cat.sample(n));
    std::copy(f.sample(n), f.sample(n) + half, cat.sample(n) + half);
  }
  Tensor y_ref =
      relu.forward(gn.forward(fuse.forward(cat, true), true), true);
  expect_close(y_block, y_ref);

  Tensor dy =
      random_tensor(y_block.n(), y_block.c(), y_block.h(), y_block.w(), 93);
  Tensor dx_block = block.backward(dy);

  Tensor dcat = fuse.backward(gn.backward(relu.backward(dy)));
  Tensor dt(dcat.n(), cout, dcat.h(), dcat.w());
  Tensor df(dcat.n(), cout, dcat.h(), dcat.w());
  for (int n = 0; n < dcat.n(); ++n) {
    std::copy(dcat.sample(n), dcat.sample(n) + half, dt.sample(n));
    std::copy(dcat.sample(n) + half, dcat.sample(n) + 2 * half, df.sample(n));
  }
  Tensor dx_ref = conv_time.backward(dt);
  Tensor dx2 = conv_freq.backward(df);
  for (std::size_t i = 0; i < dx_ref.data.size(); ++i) {
    dx_ref.data[i] += dx2.data[i];
  }
  expect_close(dx_block, dx_ref);
  for (std::size_t i = 0; i < bp.size(); ++i) {
    expect_close(*bp[i].grad, *rp[i].grad);
  }
}

TEST_CASE("maxpool: ceil-mode output sizes halve audio dims as expected") {
  nn::MaxPool2d pool(2, 2);
  Tensor x(1, 1, 98, 64);
  auto s1 = pool.forward(x, false);
  CHECK(s1.h() == 49);
  CHECK(s1.w() == 32);
  auto s2 = pool.forward(s1, false);
  CHECK(s2.h() == 25);
  CHECK(s2.w() == 16);
  auto s3 = pool.forward(s2, false);
  CHECK(s3.h() == 13);
  CHECK(s3.w() == 8);
  auto s4 = pool.forward(s3, false);
  CHECK(s4.h() == 7);
  CHECK(s4.w() == 4);
}

TEST_CASE("batchnorm: eval mode uses running statistics") {
  nn::BatchNorm2d bn(2);
  auto x = random_tensor(8, 2, 4, 4, 50);
  bn.forward(x, true);  // populate running stats
  auto before = bn.running_mean.data;
  auto y1 = bn.forward(x, false);
  auto y2 = bn.forward(x, false);
  CHECK(bn.running_mean.data == before);  // eval does not update
  CHECK(y1.data == y2.data);
}

TEST_CASE("modelzoo: golden parameter counts") {
  auto wrn16_4 =
      modelzoo::build_model(modelzoo::ModelSpec::parse("wrn16-4", 10), 1);
  CHECK(wrn16_4.param_count() == 2748890);  // ~2.75M

  auto wrn16_2 =
      modelzoo::build_model(modelzoo::ModelSpec::parse("wrn16-2", 10), 1);
  CHECK(wrn16_2.param_count() == 691674);

  auto r20 =
      modelzoo::build_model(modelzoo::ModelSpec::parse("resnet20", 10), 1);
  CHECK(r20.param_count() == 272474);

  auto vgg11 =
      modelzoo::build_model(modelzoo::ModelSpec::parse("vgg11", 10), 1);
  CHECK(vgg11.param_count() == 9228362);

  auto audio = modelzoo::build_audio_cnn(35, 1);
  CHECK(audio.param_count() == 138171);
}

TEST_CASE("modelzoo: illegal depths and unknown names rejected") {
  CHECK_THROWS_AS(modelzoo::ModelSpec::parse("resnet57", 10), ConfigError);
  CHECK_THROWS_AS(modelzoo::ModelSpec::parse("wrn17-2", 10), ConfigError);
  CHECK_THROWS_AS(modelzoo::ModelSpec::parse("vgg13", 10), ConfigError);
  CHECK_THROWS_AS(modelzoo::ModelSpec::parse("transformer", 10), ConfigError);
}

TEST_CASE("modelzoo: seeded build is reproducible, forward is pure") {
  auto a = modelzoo::build_model(modelzoo::ModelSpec::parse("resnet8", 10), 7);
  auto b = modelzoo::build_model(modelzoo::ModelSpec::parse("resnet8", 10), 7);
  CHECK(a.weights_hash() == b.weights_hash());
  auto c = modelzoo::build_model(modelzoo::ModelSpec::parse("resnet8", 10), 8);
  CHECK(a.weights_hash() != c.weights_hash());

  auto x = random_tensor(2, 3, 32, 32, 60, 0.5);
  auto y1 = a.forward(x, false);
  auto y2 = a.forward(x, false);
  CHECK(y1.data == y2.data);
  CHECK(y1.n() == 2);
  CHECK(y1.c() == 10);
}

TEST_CASE("modelzoo: audio cnn maps a spectrogram to logits") {
  auto m = modelzoo::build_audio_cnn(35, 3);
  Tensor x(2, 1, 98, 64);  // zero input
  auto y = m.forward(x, false);
  REQUIRE(y.c() == 35);
  for (float v : y.data) CHECK(std::isfinite(v));
}

TEST_CASE("checkpoint: save/load round trip preserves weights exactly") {
  auto m = modelzoo::build_model(modelzoo::ModelSpec::parse("resnet8", 10), 5);
  // give running stats non-default values
  auto x = random_tensor(4, 3, 32, 32, 61, 0.5);
  m.forward(x, true);

  auto path = std::filesystem::temp_directory_path() / "onedatum_ck.odck";
  nn::Checkpoint ck = nn::snapshot_model(m, {{"note", "unit-test"}});
  nn::save_checkpoint(path.string(), ck);
  auto back = nn::load_checkpoint(path.string());
  CHECK(back.arch == "resnet8");
  CHECK(back.meta.at("note") == "unit-test");

  auto rebuilt = modelzoo::build_from_checkpoint(back);
  CHECK(rebuilt.weights_hash() == m.weights_hash());

  // identical logits after rebuild
  auto y0 = m.forward(x, false);
  auto y1 = rebuilt.forward(x, false);
  for (std::size_t i = 0; i < y0.data.size(); ++i) {
    CHECK(y0.data[i] == doctest::Approx(y1.data[i]).epsilon(1e-6));
  }
  std::filesystem::remove(path);
}

TEST_CASE("clone: independent copy with identical weights") {
  auto m = modelzoo::build_model(modelzoo::ModelSpec::parse("resnet8", 4), 9);
  auto c = modelzoo::clone_model(m);
  CHECK(c.weights_hash() == m.weights_hash());
  c.params()[0].value->data[0] += 1.0f;
  CHECK(c.weights_hash() != m.weights_hash());
}

TEST_CASE("optim: zero learning rate leaves weights unchanged") {
  auto m = modelzoo::build_model(modelzoo::ModelSpec::parse("resnet8", 10), 2);
  auto param_hash = [&]() {
    hash::Fnv1a64 h;
    for (const auto& p : m.params()) {
      h.update(p.value->data.data(), p.value->data.size() * sizeof(float));
    }
    return h.hex();
  };
  auto before = param_hash();
  nn::Adam opt(m.params(), 0.9, 0.999, 1e-8, 0.0, false);
  auto x = random_tensor(2, 3, 32, 32, 62, 0.5);
  auto y = m.forward(x, true);  // adjusts running stats but no weights
  m.backward(Tensor::zeros_like(y));
  opt.step(0.0);
  CHECK(param_hash() == before);
}

TEST_CASE("optim: sgd momentum and adam descend a quadratic") {
  // minimize f(w) = 0.5 * ||w - target||^2 via ParamRefs
  auto run = [](auto make_opt) {
    Tensor w(4, 1, 1, 1), g(4, 1, 1, 1);
    w.data = {5.0f, -3.0f, 2.0f, 0.5f};
    std::vector<float> target = {1.0f, 1.0f, -1.0f, 0.0f};
    std::vector<nn::ParamRef> refs{{"w", &w, &g, false, false}};
    auto opt = make_opt(refs);
    for (int it = 0; it < 400; ++it) {
      for (int i = 0; i < 4; ++i) g.data[i] = w.data[i] - target[i];
      opt->step(0.05);
    }
    double err = 0.0;
    for (int i = 0; i < 4; ++i) err += std::abs(w.data[i] - target[i]);
    return err;
  };
  double sgd_err = run([](auto refs) {
    return std::make_unique<nn::Sgd>(refs, 0.9, true, 0.0);
  });
  CHECK(sgd_err < 1e-3);
  double adam_err = run([](auto refs) {
    return std::make_unique<nn::Adam>(refs, 0.9, 0.999, 1e-8, 0.0, false);
  });
  CHECK(adam_err < 1e-2);
}

TEST_CASE("optim: schedules") {
  auto fixed = nn::Schedule::fixed(0.1);
  CHECK(fixed.lr_at(0) == doctest::Approx(0.1));
  CHECK(fixed.lr_at(100000) == doctest::Approx(0.1));

  auto cos = nn::Schedule::cosine(1.0, 100);
  CHECK(cos.lr_at(0) == doctest::Approx(1.0));
  CHECK(cos.lr_at(50) == doctest::Approx(0.5));
  CHECK(cos.lr_at(100) == doctest::Approx(0.0).epsilon(1e-9));

  auto ms = nn::Schedule::multistep({0.01, 0.1, 0.001}, {400, 32000});
  CHECK(ms.lr_at(0) == doctest::Approx(0.01));
  CHECK(ms.lr_at(399) == doctest::Approx(0.01));
  CHECK(ms.lr_at(400) == doctest::Approx(0.1));
  CHECK(ms.lr_at(50000) == doctest::Approx(0.001));

  CHECK_THROWS_AS(nn::Schedule::multistep({0.1}, {100}), ConfigError);
}

TEST_CASE("dropout2d: zeroes whole channels at train time only") {
  nn::Dropout2d drop(0.5, 123);
  auto x = random_tensor(4, 8, 3, 3, 63);
  for (auto& v : x.data) v = std::abs(v) + 0.1f;  // strictly positive
  auto eval_out = drop.forward(x, false);
  CHECK(eval_out.data == x.data);

  auto train_out = drop.forward(x, true);
  int zero_channels = 0, kept = 0;
  for (int n = 0; n < 4; ++n) {
    for (int c = 0; c < 8; ++c) {
      bool all_zero = true, all_scaled = true;
      for (int i = 0; i < 9; ++i) {
        float v = train_out.sample(n)[c * 9 + i];
        float expect = x.sample(n)[c * 9 + i] * 2.0f;
        all_zero = all_zero && v == 0.0f;
        all_scaled = all_scaled && std::abs(v - expect) < 1e-6f;
      }
      REQUIRE((all_zero || all_scaled));
      if (all_zero) ++zero_channels;
      if (all_scaled) ++kept;
    }
  }
  CHECK(zero_channels + kept == 32);
  CHECK(zero_channels > 4);  // p=0.5 over 32 channels
  CHECK(kept > 4);
}
