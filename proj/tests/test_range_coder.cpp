#include <cmath>
#include <numeric>

#include "bvc/range_coder.h"
#include "doctest.h"

using namespace bvc;

TEST_SUITE_BEGIN("range_coder");

namespace {

std::vector<double> random_pmf(Rng& rng, int n) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (auto& x : p) {
    x = std::pow(10.0, rng.uniform(-6.0f, 0.0f));
    sum += x;
  }
  for (auto& x : p) x /= sum;
  return p;
}

}  // namespace

TEST_CASE("roundtrip exactness over 1000 random symbol grids") {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.uniform_int(2, 64);
    FreqTable table = quantize_pmf(random_pmf(rng, n));
    const int count = rng.uniform_int(1, 80);
    std::vector<int> symbols(count);
    for (auto& s : symbols) s = rng.uniform_int(0, n - 1);

    RangeEncoder enc;
    for (int s : symbols)
      enc.encode(table.cum[s], table.freq(s), kProbTotal);
    std::vector<uint8_t> bytes = enc.finish();

    RangeDecoder dec(bytes.data(), bytes.size());
    for (int s : symbols) {
      const uint32_t target = dec.decode_target(kProbTotal);
      const int got = table.find(target);
      REQUIRE(got == s);
      dec.decode_update(table.cum[got], table.freq(got), kProbTotal);
    }
  }
}

TEST_CASE("actual bytes track the table cross-entropy estimate") {
  Rng rng(102);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 40;
    FreqTable table = quantize_pmf(random_pmf(rng, n));
    // draw symbols from the table's own distribution
    std::vector<int> symbols;
    double est_bits = 0.0;
    for (int i = 0; i < 3000; ++i) {
      const uint32_t t = static_cast<uint32_t>(
          rng.uniform_int(0, static_cast<int>(kProbTotal) - 1));
      const int s = table.find(t);
      symbols.push_back(s);
      est_bits += table.bits(s);
    }
    RangeEncoder enc;
    for (int s : symbols) enc.encode(table.cum[s], table.freq(s), kProbTotal);
    const double actual_bits = 8.0 * static_cast<double>(enc.finish().size());
    CHECK(std::abs(actual_bits - est_bits) <= 0.02 * est_bits + 64.0);
  }
}

TEST_CASE("quantize_pmf produces exact totals, positive bins, determinism") {
  Rng rng(103);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(2, 512);
    auto pmf = random_pmf(rng, n);
    FreqTable a = quantize_pmf(pmf);
    FreqTable b = quantize_pmf(pmf);
    CHECK(a.cum == b.cum);
    CHECK(a.cum.back() == kProbTotal);
    for (int i = 0; i < a.size(); ++i) CHECK(a.freq(i) >= 1);
  }
  // underflow flagging
  std::vector<double> p = {1.0 - 1e-9, 1e-9};
  FreqTable t = quantize_pmf(p);
  CHECK(t.floored == 1);
  CHECK(t.freq(1) == 1);
}

TEST_CASE("uniform bins cover the code space") {
  // a degenerate nearly-flat pmf still roundtrips
  std::vector<double> p(256, 1.0 / 256);
  FreqTable table = quantize_pmf(p);
  RangeEncoder enc;
  std::vector<int> symbols;
  for (int i = 0; i < 256; ++i) symbols.push_back(i);
  for (int s : symbols) enc.encode(table.cum[s], table.freq(s), kProbTotal);
  auto bytes = enc.finish();
  RangeDecoder dec(bytes.data(), bytes.size());
  for (int s : symbols) {
    const int got = table.find(dec.decode_target(kProbTotal));
    REQUIRE(got == s);
    dec.decode_update(table.cum[got], table.freq(got), kProbTotal);
  }
}

TEST_CASE("truncated chunk raises a corrupt-bitstream error") {
  Rng rng(104);
  FreqTable table = quantize_pmf(random_pmf(rng, 16));
  RangeEncoder enc;
  for (int i = 0; i < 64; ++i) {
    const int s = rng.uniform_int(0, 15);
    enc.encode(table.cum[s], table.freq(s), kProbTotal);
  }
  auto bytes = enc.finish();
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS_AS(
      [&] {
        RangeDecoder dec(bytes.data(), bytes.size());
        for (int i = 0; i < 64; ++i) {
          const int got = table.find(dec.decode_target(kProbTotal));
          dec.decode_update(table.cum[got], table.freq(got), kProbTotal);
        }
      }(),
      CorruptBitstreamError);
}

TEST_SUITE_END();
