#include <doctest.h>

#include "conclab/atlas.hpp"
#include "conclab/catalog.hpp"
#include "conclab/error.hpp"
#include "conclab/geodesic.hpp"

#include <cmath>

using namespace conclab;
using namespace conclab::atlas;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

GridMap polynomial_map(const Lattice& lat, double c) {
  GridMap f = identity_map(lat);
  for (std::size_t idx : lat.active()) {
    const Vec p = lat.point(idx);
    f.values[2 * idx] = c * p[0] * p[0];
    f.values[2 * idx + 1] = 0.0;
  }
  return f;
}

}  // namespace

TEST_CASE("increment classification") {
  const double tol = 1e-4;
  CHECK(classify_increments({1.0, 0.1, 1e-5}, true, tol) == TransitionStatus::Converged);
  CHECK(classify_increments({1.0, 1e-5, 2e-5}, true, tol) == TransitionStatus::NotCauchy);
  CHECK(classify_increments({1.0, 1e-12, 3e-12}, true, tol) == TransitionStatus::Converged);
  CHECK(classify_increments({1.0, 0.5, 0.2}, true, tol) == TransitionStatus::NotCauchy);
  CHECK(classify_increments({1.0, 0.0, 0.0}, false, tol) == TransitionStatus::MaskUnstable);
  CHECK(classify_increments({1e-9}, true, tol) == TransitionStatus::NotCauchy);
}

TEST_CASE("discrete C2 norm of a quadratic") {
  // f = (c x^2, 0) on the closed ball of radius r: sup|f| = c r^2,
  // sup|Df| = 2 c r, |D^2 f| = 2 c.
  const double c = 0.5, r = 1.0;
  const Lattice lat(2, r, 0.05, true);
  const auto f = polynomial_map(lat, c);
  CHECK(c2_norm(f) == doctest::Approx(c * r * r + 2 * c * r + 2 * c).epsilon(1e-6));
  const auto g = polynomial_map(lat, c + 0.1);
  CHECK(c2_distance(f, g) == doctest::Approx(0.1 * (r * r + 2 * r + 2)).epsilon(1e-6));
  CHECK(c2_distance(f, f) == 0.0);
}

TEST_CASE("limit of a geometrically converging family") {
  const Lattice lat(2, 1.0, 0.1, true);
  std::vector<GridMap> maps;
  for (int s = 0; s < 6; ++s) maps.push_back(polynomial_map(lat, 1.0 + std::pow(0.01, s)));
  const auto lim = limit_transition(maps, 1e-4);
  CHECK(lim.status == TransitionStatus::Converged);
  REQUIRE(lim.increments.size() == 5);
  for (std::size_t s = 1; s < lim.increments.size(); ++s) CHECK(lim.increments[s] < 0.02 * lim.increments[s - 1]);
  CHECK_THROWS_AS(limit_transition({maps[0], maps[1]}, 1e-4), Error);
}

TEST_CASE("flat transition maps are translations") {
  const auto s = geometry::make_flat(2);
  const double rho = 0.6;
  const Vec yi = vec2(0.0, 0.0), yj = vec2(0.5, -0.3);
  const auto psi = transition_map_k(s, yi, yj, rho, rho / 12);
  REQUIRE(psi.defined_count() > 0);
  for (std::size_t idx : psi.lattice.active()) {
    if (!psi.defined[idx]) continue;
    CHECK((psi.at(idx) - (psi.lattice.point(idx) + yj - yi)).norm() < 1e-10);
  }
  Vec out;
  REQUIRE(psi.evaluate(vec2(0.21, 0.33), out));
  CHECK((out - vec2(0.71, 0.03)).norm() < 1e-10);
}

TEST_CASE("hyperbolic transition maps are mutually inverse isometries") {
  const auto s = geometry::make_hyperbolic(2, 2.0);
  const double rho = 0.2;
  const Vec yi = vec2(2.0, 1.0), yj = vec2(2.1, 1.02);
  const auto ij = transition_map_k(s, yi, yj, rho, rho / 4);
  const auto ji = transition_map_k(s, yj, yi, rho, rho / 4);
  REQUIRE(ij.fully_defined());
  for (std::size_t idx : ij.lattice.active()) {
    const Vec xi = ij.lattice.point(idx);
    if (xi.norm() > rho) continue;
    Vec back;
    REQUIRE(ji.evaluate(ij.at(idx), back));
    CHECK((back - xi).norm() < 1e-5);
  }
  // Normal coordinates are isometric at the origin of each chart, so
  // |psi_ij(0)| is the distance between the centers.
  const auto o = ij.lattice.index_of({0, 0, 0, 0});
  const double dist = geometry::geodesic_distance(s, yi, yj);
  CHECK(ij.at(*o).norm() == doctest::Approx(dist).epsilon(1e-8));
}
