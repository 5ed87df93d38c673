#include <cmath>

#include "bvc/contextual_codec.h"
#include "doctest.h"
#include "test_util.h"

using namespace bvc;
using bvc_test::random_tensor;

TEST_SUITE_BEGIN("contextual_codec");

namespace {

ContextSet random_contexts(Rng& rng, int ctx_ch, int h, int w, Direction d) {
  ContextSet c;
  c.c0 = Var(random_tensor({ctx_ch, h, w}, rng));
  c.c1 = Var(random_tensor({ctx_ch, h / 2, w / 2}, rng));
  c.c2 = Var(random_tensor({ctx_ch, h / 4, w / 4}, rng));
  c.direction = d;
  return c;
}

ContextSet zero_contexts(int ctx_ch, int h, int w, Direction d) {
  ContextSet c;
  c.c0 = Var(Tensor::zeros({ctx_ch, h, w}));
  c.c1 = Var(Tensor::zeros({ctx_ch, h / 2, w / 2}));
  c.c2 = Var(Tensor::zeros({ctx_ch, h / 4, w / 4}));
  c.direction = d;
  return c;
}

}  // namespace

TEST_CASE("latent shape matches the H/16 contract at default widths") {
  Rng rng(71);
  ContextualCodec cc(rng, 16, 96, 12, 12, 8);
  NoGradGuard g;
  const int h = 32, w = 48;
  Var x(random_tensor({3, h, w}, rng, 0.0f, 1.0f));
  auto cf = random_contexts(rng, 12, h, w, Direction::kForward);
  auto cb = random_contexts(rng, 12, h, w, Direction::kBackward);
  auto enc = cc.encode(x, cf, cb, 2.0);
  CHECK(enc.symbols.value().shape() == std::vector<int>{96, h / 16, w / 16});

  auto bad = random_contexts(rng, 12, h, w / 2, Direction::kForward);
  CHECK_THROWS_AS(cc.encode(x, bad, cb, 2.0), std::invalid_argument);
}

TEST_CASE("deterministic encode/decode roundtrip with reconstruction bounds") {
  Rng rng(72);
  ContextualCodec cc(rng, 8, 12, 6, 8, 6);
  NoGradGuard g;
  const int h = 32, w = 32;
  Tensor x = random_tensor({3, h, w}, rng, 0.0f, 1.0f);
  auto cf = random_contexts(rng, 6, h, w, Direction::kForward);
  auto cb = random_contexts(rng, 6, h, w, Direction::kBackward);

  auto run = [&] {
    auto enc = cc.encode(Var(x), cf, cb, 1.0);
    return cc.decode(enc.symbols, cf, cb, 1.0, h, w);
  };
  ReconResult r1 = run();
  ReconResult r2 = run();
  CHECK(r1.x_hat.value().shape() == std::vector<int>{3, h, w});
  CHECK(r1.f_hat.value().shape() == std::vector<int>{8, h, w});
  for (size_t i = 0; i < r1.x_hat.value().numel(); ++i) {
    CHECK(r1.x_hat.value()[i] == r2.x_hat.value()[i]);
    CHECK(r1.x_hat.value()[i] >= 0.0f);
    CHECK(r1.x_hat.value()[i] <= 1.0f);
  }
  for (size_t i = 0; i < r1.f_hat.value().numel(); ++i)
    CHECK(r1.f_hat.value()[i] == r2.f_hat.value()[i]);
}

TEST_CASE("x_hat stays in [0,1] even for wild latents") {
  Rng rng(73);
  ContextualCodec cc(rng, 8, 12, 6, 8, 6);
  NoGradGuard g;
  const int h = 32, w = 32;
  auto cf = random_contexts(rng, 6, h, w, Direction::kForward);
  auto cb = random_contexts(rng, 6, h, w, Direction::kBackward);
  Tensor crazy({12, 2, 2});
  for (size_t i = 0; i < crazy.numel(); ++i)
    crazy[i] = static_cast<float>(rng.uniform_int(-200, 200));
  ReconResult r = cc.decode(Var(crazy), cf, cb, 0.0, h, w);
  for (size_t i = 0; i < r.x_hat.value().numel(); ++i) {
    CHECK(r.x_hat.value()[i] >= 0.0f);
    CHECK(r.x_hat.value()[i] <= 1.0f);
  }
}

TEST_CASE("zeroed contexts still yield a valid latent (intra-style fallback)") {
  Rng rng(74);
  ContextualCodec cc(rng, 8, 12, 6, 8, 6);
  NoGradGuard g;
  const int h = 32, w = 32;
  Var x(random_tensor({3, h, w}, rng, 0.0f, 1.0f));
  auto zf = zero_contexts(6, h, w, Direction::kForward);
  auto zb = zero_contexts(6, h, w, Direction::kBackward);
  auto enc = cc.encode(x, zf, zb, 3.0);
  CHECK(enc.symbols.value().all_finite());
  ReconResult r = cc.decode(enc.symbols, zf, zb, 3.0, h, w);
  CHECK(r.x_hat.value().all_finite());
}

TEST_CASE("corrupt latent shapes raise corrupt-bitstream errors") {
  Rng rng(75);
  ContextualCodec cc(rng, 8, 12, 6, 8, 6);
  NoGradGuard g;
  const int h = 32, w = 32;
  auto cf = random_contexts(rng, 6, h, w, Direction::kForward);
  auto cb = random_contexts(rng, 6, h, w, Direction::kBackward);
  CHECK_THROWS_AS(cc.decode(Var(Tensor::zeros({12, 3, 2})), cf, cb, 0.0, h, w),
                  CorruptBitstreamError);
  CHECK_THROWS_AS(cc.decode(Var(Tensor::zeros({11, 2, 2})), cf, cb, 0.0, h, w),
                  CorruptBitstreamError);
}

TEST_CASE("training gradients reach encoder, decoder, and quant banks") {
  Rng rng(76);
  ContextualCodec cc(rng, 8, 12, 6, 8, 6);
  const int h = 32, w = 32;
  Tensor x = random_tensor({3, h, w}, rng, 0.0f, 1.0f);
  auto cf = random_contexts(rng, 6, h, w, Direction::kForward);
  auto cb = random_contexts(rng, 6, h, w, Direction::kBackward);
  cc.zero_grad();
  auto enc = cc.encode(Var(x), cf, cb, 2.0);
  ReconResult r = cc.decode(enc.symbols, cf, cb, 2.0, h, w);
  backward(mean_all(square(sub(r.x_hat, Var(x)))));
  int enc_nz = 0, dec_nz = 0, q_nz = 0;
  for (Param* p : cc.parameters()) {
    const bool nz = p->var.grad().defined() && p->var.grad().abs_max() > 0;
    if (!nz) continue;
    if (p->name.rfind("g0.", 0) == 0) ++enc_nz;
    if (p->name.rfind("u0.", 0) == 0 || p->name.rfind("out.", 0) == 0) ++dec_nz;
    if (p->name.rfind("q_enc.", 0) == 0 || p->name.rfind("q_dec.", 0) == 0) ++q_nz;
  }
  CHECK(enc_nz > 0);
  CHECK(dec_nz > 0);
  CHECK(q_nz > 0);
}

TEST_SUITE_END();
