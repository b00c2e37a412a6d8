#include <doctest.h>

#include "conclab/bump.hpp"
#include "conclab/catalog.hpp"
#include "conclab/error.hpp"
#include "conclab/partition.hpp"

#include <random>

using namespace conclab;
using namespace conclab::profiles;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("partition of unity sums to one and matches the closed form") {
  const auto s = geometry::make_flat(2);
  const double rho = 0.6;
  const auto d = discretization::build(s, discretization::Region::box(vec2(-2, -2), vec2(2, 2)), 0.45, rho);
  const auto pou = build_partition(s, d, rho);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.8, 1.8);
  std::vector<Vec> pts;
  for (int n = 0; n < 100; ++n) pts.push_back(vec2(u(rng), u(rng)));
  for (const auto& x : pts) {
    const auto w = pou.evaluate(x);
    double sum = 0.0, denom = 0.0;
    for (const auto& p : d.points) denom += bump((p - x).norm() / rho);
    for (const auto& cw : w) {
      sum += cw.value;
      CHECK(cw.value == doctest::Approx(bump((d.points[cw.center] - x).norm() / rho) / denom).epsilon(1e-12));
      CHECK((cw.coords - (x - d.points[cw.center])).norm() < 1e-12);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto chk = check_partition(pou, pts);
  CHECK(chk.test_points == pts.size());
  CHECK(chk.max_sum_error < 1e-12);
  CHECK(chk.max_gradient > 0.0);
}

TEST_CASE("points outside every chart ball raise CoveringGap") {
  const auto s = geometry::make_flat(2);
  const auto d = discretization::build(s, discretization::Region::box(vec2(0, 0), vec2(1, 1)), 0.45, 0.6);
  const auto pou = build_partition(s, d, 0.6, -1.0);
  try {
    (void)pou.evaluate(vec2(10, 10));
    FAIL("expected CoveringGap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CoveringGap);
  }
}
