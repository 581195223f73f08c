#include <doctest.h>

#include <algorithm>
#include <random>

#include "recdet/grouping.hpp"

using namespace recdet;

namespace {

DetectionState make_state(const BBox& box, int label, double score,
                          int num_classes = 4) {
  DetectionState s;
  s.box = box;
  s.class_probs.assign(static_cast<std::size_t>(num_classes) + 1,
                       (1.0 - score) / num_classes);
  s.class_probs[static_cast<std::size_t>(label)] = score;
  s.update_prediction();
  return s;
}

}  // namespace

TEST_CASE("form_group keeps the target alone in a singleton pool") {
  std::vector<DetectionState> pool{make_state(BBox{10, 10, 20, 20}, 1, 0.9)};
  const auto group = form_group(0, pool, 0.7);
  REQUIRE(group.size() == 1);
  CHECK(group[0].index == 0);
}

TEST_CASE("form_group admits overlapping same-class neighbors") {
  std::vector<DetectionState> pool{
      make_state(BBox{10, 10, 20, 20}, 2, 0.9),
      make_state(BBox{12, 10, 20, 20}, 2, 0.6),  // IoU ~ 0.818
  };
  const auto group = form_group(0, pool, 0.7);
  REQUIRE(group.size() == 2);
  CHECK(group[0].index == 0);
  CHECK(group[1].index == 1);
}

TEST_CASE("form_group excludes other classes") {
  std::vector<DetectionState> pool{
      make_state(BBox{10, 10, 20, 20}, 2, 0.9),
      make_state(BBox{12, 10, 20, 20}, 3, 0.6),
  };
  const auto group = form_group(0, pool, 0.7);
  REQUIRE(group.size() == 1);
  CHECK(group[0].index == 0);
}

TEST_CASE("form_group threshold is strict") {
  // Two identical-width boxes shifted to land exactly at IoU 0.7 are
  // awkward to construct; use a neighbor just below and just above.
  std::vector<DetectionState> pool{
      make_state(BBox{10, 10, 20, 20}, 1, 0.9),
      make_state(BBox{13.4, 10, 20, 20}, 1, 0.5),  // IoU ~ 0.7059
      make_state(BBox{14, 10, 20, 20}, 1, 0.5),    // IoU ~ 0.6667
  };
  const auto group = form_group(0, pool, 0.7);
  REQUIRE(group.size() == 2);
  CHECK(group[1].index == 1);
}

TEST_CASE("form_group rejects background targets") {
  std::vector<DetectionState> pool{make_state(BBox{10, 10, 20, 20}, 0, 0.9)};
  CHECK_THROWS_WITH_AS(form_group(0, pool, 0.7), "background has no group",
                       std::invalid_argument);
}

TEST_CASE("pooling hand examples") {
  SUBCASE("single member returns its own box") {
    const BBox pooled = group_confidence_pool({{BBox{3, 4, 5, 6}, 0.2, 0}});
    CHECK(pooled.x == doctest::Approx(3.0));
    CHECK(pooled.h == doctest::Approx(6.0));
  }
  SUBCASE("equal scores average coordinates") {
    const BBox pooled = group_confidence_pool(
        {{BBox{10, 10, 20, 20}, 0.5, 0}, {BBox{14, 12, 24, 28}, 0.5, 1}});
    CHECK(pooled.x == doctest::Approx(12.0));
    CHECK(pooled.y == doctest::Approx(11.0));
    CHECK(pooled.w == doctest::Approx(22.0));
    CHECK(pooled.h == doctest::Approx(24.0));
  }
  SUBCASE("weighted example") {
    const BBox pooled = group_confidence_pool(
        {{BBox{10, 10, 20, 20}, 0.8, 0}, {BBox{12, 10, 20, 20}, 0.2, 1}});
    CHECK(pooled.x == doctest::Approx(10.4).epsilon(1e-12));
    CHECK(pooled.y == doctest::Approx(10.0));
    CHECK(pooled.w == doctest::Approx(20.0));
    CHECK(pooled.h == doctest::Approx(20.0));
  }
}

TEST_CASE("pooling rejects empty groups") {
  CHECK_THROWS_WITH_AS(group_confidence_pool({}), "empty group",
                       std::invalid_argument);
}

TEST_CASE("pooling properties over random groups") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> coord(0.0, 100.0);
  std::uniform_real_distribution<double> size(1.0, 40.0);
  std::uniform_real_distribution<double> weight(1e-3, 1.0);
  std::uniform_int_distribution<int> count(1, 6);

  for (int trial = 0; trial < 500; ++trial) {
    std::vector<GroupMember> group;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      group.push_back(GroupMember{BBox{coord(rng), coord(rng), size(rng), size(rng)},
                                  weight(rng), static_cast<std::size_t>(i)});
    }
    const BBox pooled = group_confidence_pool(group);

    // Convex combination: every coordinate stays within member bounds.
    auto field_bounds = [&](auto get) {
      double lo = get(group[0].box), hi = lo;
      for (const GroupMember& m : group) {
        lo = std::min(lo, get(m.box));
        hi = std::max(hi, get(m.box));
      }
      return std::pair{lo, hi};
    };
    auto [xl, xh] = field_bounds([](const BBox& b) { return b.x; });
    CHECK(pooled.x >= xl - 1e-9);
    CHECK(pooled.x <= xh + 1e-9);
    auto [wl, wh] = field_bounds([](const BBox& b) { return b.w; });
    CHECK(pooled.w >= wl - 1e-9);
    CHECK(pooled.w <= wh + 1e-9);
    CHECK(pooled.w > 0.0);
    CHECK(pooled.h > 0.0);

    // Common scaling of the scores changes nothing.
    std::vector<GroupMember> scaled = group;
    for (GroupMember& m : scaled) m.score *= 37.5;
    const BBox pooled2 = group_confidence_pool(scaled);
    CHECK(pooled2.x == doctest::Approx(pooled.x).epsilon(1e-12));
    CHECK(pooled2.w == doctest::Approx(pooled.w).epsilon(1e-12));

    // Permutation invariance.
    std::vector<GroupMember> shuffled = group;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const BBox pooled3 = group_confidence_pool(shuffled);
    CHECK(pooled3.x == doctest::Approx(pooled.x).epsilon(1e-9));
    CHECK(pooled3.h == doctest::Approx(pooled.h).epsilon(1e-9));
  }
}
