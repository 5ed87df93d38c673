#include <map>
#include <set>

#include "bvc/gop.h"
#include "doctest.h"

using namespace bvc;

namespace {

// Independent oracle: instead of recursive construction, each frame's layer
// and references are derived by a per-frame midpoint walk down its GOP span,
// then rows are ordered by the same (gop, layer, display) rule.
struct OracleRow {
  int display, layer, fwd, bwd;
  bool intra;
};

std::vector<OracleRow> oracle_plan(int num_frames, int intra_period) {
  std::vector<int> intras;
  for (int i = 0; i < num_frames; i += intra_period) intras.push_back(i);
  if (intras.back() != num_frames - 1) intras.push_back(num_frames - 1);
  std::set<int> intra_set(intras.begin(), intras.end());

  std::vector<OracleRow> rows;
  rows.push_back({intras[0], 0, -1, -1, true});
  for (size_t g = 1; g < intras.size(); ++g) {
    const int a = intras[g - 1], b = intras[g];
    rows.push_back({b, 0, -1, -1, true});
    // collect (layer, display) for every interior frame via midpoint walk
    std::vector<OracleRow> interior;
    for (int x = a + 1; x < b; ++x) {
      int lo = a, hi = b, depth = 0;
      while (true) {
        ++depth;
        const int mid = (lo + hi) / 2;
        if (x == mid) {
          interior.push_back({x, depth, lo, hi, false});
          break;
        }
        if (x < mid)
          hi = mid;
        else
          lo = mid;
      }
    }
    std::sort(interior.begin(), interior.end(),
              [](const OracleRow& p, const OracleRow& q) {
                if (p.layer != q.layer) return p.layer < q.layer;
                return p.display < q.display;
              });
    for (const auto& r : interior) rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_SUITE_BEGIN("gop");

TEST_CASE("plan matches the independent bisection oracle for 1..130 frames") {
  GopConfig cfg;
  for (int n = 1; n <= 130; ++n) {
    auto plans = plan_sequence(n, cfg);
    auto expected = oracle_plan(n, cfg.intra_period);
    REQUIRE(plans.size() == static_cast<size_t>(n));
    REQUIRE(expected.size() == static_cast<size_t>(n));
    std::set<int> covered;
    for (size_t i = 0; i < plans.size(); ++i) {
      const FramePlan& p = plans[i];
      CHECK(p.coding_order == static_cast<int>(i));
      CHECK(p.display_index == expected[i].display);
      CHECK(p.layer == expected[i].layer);
      CHECK((p.frame_type == FrameType::kIntra) == expected[i].intra);
      CHECK(p.fwd_ref == expected[i].fwd);
      CHECK(p.bwd_ref == expected[i].bwd);
      covered.insert(p.display_index);
    }
    CHECK(covered.size() == static_cast<size_t>(n));
    CHECK(*covered.begin() == 0);
    CHECK(*covered.rbegin() == n - 1);
  }
}

TEST_CASE("topological validity, bisection and layer ordering for 1..130") {
  GopConfig cfg;
  for (int n = 1; n <= 130; ++n) {
    auto plans = plan_sequence(n, cfg);
    std::map<int, const FramePlan*> by_display;
    for (const auto& p : plans) by_display[p.display_index] = &p;
    for (const auto& p : plans) {
      if (p.frame_type == FrameType::kIntra) {
        CHECK(p.layer == 0);
        CHECK(p.fwd_ref == -1);
        CHECK(p.bwd_ref == -1);
        continue;
      }
      const FramePlan& f = *by_display.at(p.fwd_ref);
      const FramePlan& b = *by_display.at(p.bwd_ref);
      CHECK(p.fwd_ref < p.display_index);
      CHECK(p.display_index < p.bwd_ref);
      CHECK(f.coding_order < p.coding_order);
      CHECK(b.coding_order < p.coding_order);
      CHECK(p.display_index == (p.fwd_ref + p.bwd_ref) / 2);
      CHECK(p.layer >= std::max(f.layer, b.layer));
      if (f.frame_type == FrameType::kBi && b.frame_type == FrameType::kBi)
        CHECK(p.layer > std::min(f.layer, b.layer));
    }
  }
}

TEST_CASE("33-frame plan reproduces the six-layer GOP-32 layout") {
  auto plans = plan_sequence(33, GopConfig{});
  std::map<int, const FramePlan*> by_display;
  for (const auto& p : plans) by_display[p.display_index] = &p;

  CHECK(by_display.at(0)->frame_type == FrameType::kIntra);
  CHECK(by_display.at(32)->frame_type == FrameType::kIntra);
  CHECK(by_display.at(16)->layer == 1);
  CHECK(by_display.at(16)->fwd_ref == 0);
  CHECK(by_display.at(16)->bwd_ref == 32);
  for (int d : {8, 24}) CHECK(by_display.at(d)->layer == 2);
  for (int d : {4, 12, 20, 28}) CHECK(by_display.at(d)->layer == 3);
  for (int d = 1; d < 32; ++d) {
    if (d % 2 == 1)
      CHECK(by_display.at(d)->layer == 5);
    else if (d % 4 != 0)
      CHECK(by_display.at(d)->layer == 4);
  }
  // layer census including the closing I slot
  std::array<int, 6> census{};
  for (const auto& p : plans)
    if (p.display_index > 0) census[static_cast<size_t>(p.layer)]++;
  CHECK(census == std::array<int, 6>{1, 1, 2, 4, 8, 16});
  // first records in coding order: both I frames then the layer-1 frame
  CHECK(plans[0].display_index == 0);
  CHECK(plans[1].display_index == 32);
  CHECK(plans[2].display_index == 16);
}

TEST_CASE("96-frame tail GOP promotes the final frame and bisects the rest") {
  auto plans = plan_sequence(96, GopConfig{});
  std::map<int, const FramePlan*> by_display;
  for (const auto& p : plans) by_display[p.display_index] = &p;
  for (int d : {0, 32, 64, 95})
    CHECK(by_display.at(d)->frame_type == FrameType::kIntra);
  const FramePlan& mid = *by_display.at(79);  // floor((64+95)/2)
  CHECK(mid.layer == 1);
  CHECK(mid.fwd_ref == 64);
  CHECK(mid.bwd_ref == 95);
  CHECK(by_display.at(71)->layer == 2);
  CHECK(by_display.at(87)->layer == 2);
  for (int d = 65; d < 95; ++d)
    CHECK(by_display.at(d)->frame_type == FrameType::kBi);
}

TEST_CASE("degenerate sequences") {
  auto one = plan_sequence(1, GopConfig{});
  REQUIRE(one.size() == 1);
  CHECK(one[0].frame_type == FrameType::kIntra);
  CHECK(one[0].coding_order == 0);

  auto two = plan_sequence(2, GopConfig{});
  REQUIRE(two.size() == 2);
  CHECK(two[1].frame_type == FrameType::kIntra);  // promoted tail

  CHECK_THROWS_AS(plan_sequence(0, GopConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(plan_sequence(-3, GopConfig{}), std::invalid_argument);
}

TEST_CASE("quality coefficients by layer") {
  GopConfig cfg;
  FramePlan p;
  p.layer = 1;
  CHECK(quality_coeff_for(p, cfg) == doctest::Approx(1.4));
  p.layer = 2;
  CHECK(quality_coeff_for(p, cfg) == doctest::Approx(1.4));
  p.layer = 3;
  CHECK(quality_coeff_for(p, cfg) == doctest::Approx(0.7));
  p.layer = 5;
  CHECK(quality_coeff_for(p, cfg) == doctest::Approx(0.5));
  p.layer = 0;
  CHECK(quality_coeff_for(p, cfg) == doctest::Approx(1.0));
  p.layer = 6;
  CHECK_THROWS_AS(quality_coeff_for(p, cfg), std::invalid_argument);
}

TEST_CASE("reference case dispatch") {
  auto plans = plan_sequence(33, GopConfig{});
  std::map<int, const FramePlan*> by_display;
  for (const auto& p : plans) by_display[p.display_index] = &p;
  CHECK(reference_case(*by_display.at(16), plans) == RefCase::kII);
  CHECK(reference_case(*by_display.at(8), plans) == RefCase::kIB);
  CHECK(reference_case(*by_display.at(24), plans) == RefCase::kBI);
  CHECK(reference_case(*by_display.at(12), plans) == RefCase::kBB);
  CHECK_THROWS_AS(reference_case(*by_display.at(0), plans),
                  std::invalid_argument);
}

TEST_CASE("plans are deterministic and the dump format is stable") {
  auto a = dump_plan(plan_sequence(40, GopConfig{}));
  auto b = dump_plan(plan_sequence(40, GopConfig{}));
  CHECK(a == b);

  auto three = dump_plan(plan_sequence(3, GopConfig{}));
  CHECK(three ==
        "0 0 0 I - - 1\n"
        "1 2 0 I - - 1\n"
        "2 1 1 B 0 2 1.4\n");
}

TEST_CASE("config validation") {
  GopConfig cfg;
  cfg.intra_period = 33;
  CHECK_THROWS_AS(plan_sequence(5, cfg), std::invalid_argument);
  cfg = GopConfig{};
  cfg.gop_size = 12;  // 32 % 12 != 0
  CHECK_THROWS_AS(plan_sequence(5, cfg), std::invalid_argument);
  cfg = GopConfig{};
  cfg.quality_coeffs[2] = -0.1;
  CHECK_THROWS_AS(plan_sequence(5, cfg), std::invalid_argument);
}

TEST_SUITE_END();
