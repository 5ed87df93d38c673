#include <cmath>

#include "bvc/nn.h"
#include "bvc/ops.h"
#include "doctest.h"
#include "test_util.h"

using namespace bvc;
using bvc_test::fd_grad_check;
using bvc_test::random_tensor;

namespace {

Var weighted_sum(const Var& x, const Tensor& w) {
  return sum_all(mul(x, Var(w, false)));
}

}  // namespace

TEST_SUITE_BEGIN("ops");

TEST_CASE("conv2d forward matches direct computation") {
  Rng rng(1);
  Tensor x = random_tensor({2, 5, 6}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  NoGradGuard g;
  Var out = conv2d(Var(x), Var(w), Var(b), 2, 1);
  CHECK(out.value().dim(0) == 3);
  CHECK(out.value().dim(1) == 3);  // (5+2-3)/2+1
  CHECK(out.value().dim(2) == 3);
  // direct sum at one position
  const int oy = 1, ox = 2, oc = 1, stride = 2, pad = 1;
  float acc = b[oc];
  for (int ci = 0; ci < 2; ++ci)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
        if (iy < 0 || iy >= 5 || ix < 0 || ix >= 6) continue;
        acc += x.at(ci, iy, ix) * w[((oc * 2 + ci) * 3 + ky) * 3 + kx];
      }
  CHECK(out.value().at(oc, oy, ox) == doctest::Approx(acc).epsilon(1e-5));
}

TEST_CASE("conv2d gradients vs finite differences") {
  Rng rng(2);
  Tensor x = random_tensor({2, 6, 6}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  Tensor lw = random_tensor({3, 3, 3}, rng);
  auto loss = [&](const std::vector<Var>& v) {
    return weighted_sum(conv2d(v[0], v[1], v[2], 2, 1), lw);
  };
  for (size_t t = 0; t < 3; ++t) {
    Rng r2(7);
    CHECK(fd_grad_check(loss, {x, w, b}, t, r2) < 1e-3);
  }
}

TEST_CASE("pixel_shuffle roundtrips spatial layout and has exact gradient") {
  Rng rng(3);
  Tensor x = random_tensor({8, 3, 2}, rng);
  NoGradGuard g;
  Var out = pixel_shuffle(Var(x), 2);
  CHECK(out.value().shape() == std::vector<int>{2, 6, 4});
  CHECK(out.value().at(0, 1, 0) == x.at(2, 0, 0));  // dy=1,dx=0 -> channel 2
  CHECK(out.value().at(1, 0, 1) == x.at(5, 0, 0));  // c=1,dy=0,dx=1
}

TEST_CASE("warp with zero flow is identity") {
  Rng rng(4);
  Tensor f = random_tensor({3, 8, 9}, rng);
  NoGradGuard g;
  Var out = warp_bilinear(Var(f), Var(Tensor::zeros({2, 8, 9})));
  for (size_t i = 0; i < f.numel(); ++i)
    CHECK(std::abs(out.value()[i] - f[i]) < 1e-6f);
}

TEST_CASE("warp gradient vs finite differences (feature and flow)") {
  Rng rng(5);
  Tensor f = random_tensor({2, 7, 7}, rng);
  Tensor flow({2, 7, 7});
  for (size_t i = 0; i < flow.numel(); ++i)  // fractional part in [0.3, 0.7]
    flow[i] = static_cast<float>(rng.uniform_int(-1, 1)) + rng.uniform(0.3f, 0.7f);
  Tensor lw = random_tensor({2, 7, 7}, rng);
  auto loss = [&](const std::vector<Var>& v) {
    return weighted_sum(warp_bilinear(v[0], v[1]), lw);
  };
  Rng r2(11);
  CHECK(fd_grad_check(loss, {f, flow}, 0, r2, 20, 1e-3) < 1e-3);
  CHECK(fd_grad_check(loss, {f, flow}, 1, r2, 20, 1e-3) < 1e-3);
}

TEST_CASE("avg_pool2 equals 2x2 mean and bilinear_up2 preserves constants") {
  Rng rng(6);
  Tensor x = random_tensor({1, 4, 4}, rng);
  NoGradGuard g;
  Var p = avg_pool2(Var(x));
  CHECK(p.value().at(0, 0, 0) ==
        doctest::Approx(0.25f * (x.at(0, 0, 0) + x.at(0, 0, 1) +
                                 x.at(0, 1, 0) + x.at(0, 1, 1))));
  Var up = bilinear_up2(Var(Tensor::full({2, 3, 3}, 1.5f)));
  for (size_t i = 0; i < up.value().numel(); ++i)
    CHECK(up.value()[i] == doctest::Approx(1.5f));
}

TEST_CASE("elementwise op gradients") {
  Rng rng(7);
  Tensor x = random_tensor({2, 3, 3}, rng, -2.0f, 2.0f);
  Tensor lw = random_tensor({2, 3, 3}, rng);
  auto mk = [&](std::function<Var(const Var&)> f) {
    return [&, f](const std::vector<Var>& v) { return weighted_sum(f(v[0]), lw); };
  };
  Rng r2(13);
  CHECK(fd_grad_check(mk([](const Var& a) { return sigmoid(a); }), {x}, 0, r2) < 1e-3);
  CHECK(fd_grad_check(mk([](const Var& a) { return tanh_op(a); }), {x}, 0, r2) < 1e-3);
  CHECK(fd_grad_check(mk([](const Var& a) { return softplus(a); }), {x}, 0, r2) < 1e-3);
  CHECK(fd_grad_check(mk([](const Var& a) { return exp_op(a); }), {x}, 0, r2) < 1e-3);
  CHECK(fd_grad_check(mk([](const Var& a) { return square(a); }), {x}, 0, r2) < 1e-3);
  Tensor xp = random_tensor({2, 3, 3}, rng, 0.7f, 2.0f);
  CHECK(fd_grad_check(mk([](const Var& a) { return reciprocal(a); }), {xp}, 0, r2, 20, 5e-3) < 1e-3);
}

TEST_CASE("channel_scale and broadcast mul gradients") {
  Rng rng(8);
  Tensor x = random_tensor({3, 4, 4}, rng);
  Tensor s = random_tensor({3}, rng, 0.5f, 2.0f);
  Tensor m = random_tensor({1, 4, 4}, rng);
  Tensor lw = random_tensor({3, 4, 4}, rng);
  auto loss1 = [&](const std::vector<Var>& v) {
    return weighted_sum(channel_scale(v[0], v[1]), lw);
  };
  auto loss2 = [&](const std::vector<Var>& v) {
    return weighted_sum(mul_ch_bcast(v[0], v[1]), lw);
  };
  Rng r2(17);
  CHECK(fd_grad_check(loss1, {x, s}, 0, r2) < 1e-3);
  CHECK(fd_grad_check(loss1, {x, s}, 1, r2) < 1e-3);
  CHECK(fd_grad_check(loss2, {x, m}, 0, r2) < 1e-3);
  CHECK(fd_grad_check(loss2, {x, m}, 1, r2) < 1e-3);
}

TEST_CASE("laplace_bits matches direct CDF difference and its gradients") {
  Rng rng(9);
  Tensor d = random_tensor({1, 40}, rng, -3.0f, 3.0f);
  Tensor b = random_tensor({1, 40}, rng, 0.4f, 2.5f);
  {
    NoGradGuard g;
    Var bits = laplace_bits(Var(d), Var(b));
    for (int i = 0; i < 40; ++i) {
      auto cdf = [&](double x) {
        double bb = b[i];
        return x < 0 ? 0.5 * std::exp(x / bb) : 1.0 - 0.5 * std::exp(-x / bb);
      };
      double p = cdf(d[i] + 0.5) - cdf(d[i] - 0.5);
      CHECK(bits.value()[i] ==
            doctest::Approx(-std::log2(p)).epsilon(1e-4));
    }
  }
  Tensor lw = random_tensor({1, 40}, rng, -0.2f, 0.2f);
  auto loss = [&](const std::vector<Var>& v) {
    return weighted_sum(laplace_bits(v[0], v[1]), lw);
  };
  Rng r2(19);
  CHECK(fd_grad_check(loss, {d, b}, 0, r2, 20, 1e-2) < 1e-3);
  CHECK(fd_grad_check(loss, {d, b}, 1, r2, 20, 5e-3) < 1e-3);
}

TEST_CASE("channel_affine and channel_scale_vec gradients") {
  Rng rng(10);
  Tensor x = random_tensor({2, 3, 5}, rng);
  Tensor w = random_tensor({2, 4, 3}, rng);
  Tensor b = random_tensor({2, 4}, rng);
  Tensor s = random_tensor({2, 3}, rng);
  Tensor lw = random_tensor({2, 4, 5}, rng);
  Tensor lw2 = random_tensor({2, 3, 5}, rng);
  auto loss = [&](const std::vector<Var>& v) {
    return weighted_sum(channel_affine(v[0], v[1], v[2]), lw);
  };
  Rng r2(23);
  for (size_t t = 0; t < 3; ++t) CHECK(fd_grad_check(loss, {x, w, b}, t, r2) < 1e-3);
  auto loss2 = [&](const std::vector<Var>& v) {
    return weighted_sum(channel_scale_vec(v[0], v[1]), lw2);
  };
  CHECK(fd_grad_check(loss2, {x, s}, 0, r2) < 1e-3);
  CHECK(fd_grad_check(loss2, {x, s}, 1, r2) < 1e-3);
}

TEST_CASE("round_ste rounds in value and passes gradient through") {
  Tensor x({4});
  x[0] = 2.4f; x[1] = -1.6f; x[2] = 0.5f; x[3] = 0.0f;
  Var v(x, true);
  Var out = round_ste(v);
  CHECK(out.value()[0] == 2.0f);
  CHECK(out.value()[1] == -2.0f);
  CHECK(out.value()[2] == 0.0f);  // nearbyint ties-to-even
  backward(sum_all(out));
  for (int i = 0; i < 4; ++i) CHECK(v.grad()[i] == 1.0f);
}

TEST_CASE("residual and bottleneck blocks keep shape; subpixel upsamples") {
  Rng rng(11);
  ResidualBlock rb(rng, 6);
  BottleneckBlock bb(rng, 10, 6);
  SubpixelUp up(rng, 6, 4, 2);
  NoGradGuard g;
  Var x(random_tensor({6, 8, 8}, rng));
  CHECK(rb.forward(x).value().shape() == std::vector<int>{6, 8, 8});
  Var y(random_tensor({10, 8, 8}, rng));
  CHECK(bb.forward(y).value().shape() == std::vector<int>{6, 8, 8});
  CHECK(up.forward(x).value().shape() == std::vector<int>{4, 16, 16});
}

TEST_CASE("reflect padding and crop invert each other") {
  Rng rng(12);
  Tensor x = random_tensor({3, 5, 7}, rng);
  Tensor padded = reflect_pad_hw(x, 3, 2);
  CHECK(padded.shape() == std::vector<int>{3, 7, 10});
  CHECK(padded.at(0, 0, 7) == x.at(0, 0, 5));  // reflection of column 5
  Tensor back = crop_tensor_hw(padded, 5, 7);
  for (size_t i = 0; i < x.numel(); ++i) CHECK(back[i] == x[i]);
}

TEST_CASE("adamw reduces a quadratic objective deterministically") {
  auto run = [] {
    Rng rng(13);
    auto p = std::make_unique<Param>();
    p->name = "w";
    p->var = Var(random_tensor({8}, rng), true);
    AdamW opt({p.get()}, 0.05f);
    for (int it = 0; it < 50; ++it) {
      opt.zero_grad();
      Var loss = sum_all(square(p->var));
      backward(loss);
      opt.step();
    }
    return p->var.value();
  };
  Tensor a = run(), b2 = run();
  for (size_t i = 0; i < a.numel(); ++i) {
    CHECK(a[i] == b2[i]);
    CHECK(std::abs(a[i]) < 0.2f);
  }
}

TEST_SUITE_END();
