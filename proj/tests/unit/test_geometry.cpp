#include <doctest.h>

#include "conclab/bump.hpp"
#include "conclab/catalog.hpp"
#include "conclab/curvature.hpp"
#include "conclab/error.hpp"
#include "conclab/geodesic.hpp"

#include <cmath>
#include <random>

using namespace conclab;
using namespace conclab::geometry;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Hyperbolic distance between polar points (t0, th0) and (t1, th1).
double hyperbolic_distance(const Vec& p, const Vec& q) {
  const double c = std::cosh(p[0]) * std::cosh(q[0]) - std::sinh(p[0]) * std::sinh(q[0]) * std::cos(q[1] - p[1]);
  return std::acosh(std::max(1.0, c));
}

}  // namespace

TEST_CASE("mollifier profile") {
  CHECK(bump(0.0) == doctest::Approx(1.0));
  CHECK(bump(1.0) == 0.0);
  CHECK(bump(-1.5) == 0.0);
  CHECK(bump(0.5) == doctest::Approx(std::exp(1.0 - 1.0 / 0.75)));
  for (double s : {-0.7, -0.2, 0.3, 0.8}) {
    const double h = 1e-5;
    CHECK(bump_d1(s) == doctest::Approx((bump(s + h) - bump(s - h)) / (2 * h)).epsilon(1e-6));
    CHECK(bump_d2(s) == doctest::Approx((bump_d1(s + h) - bump_d1(s - h)) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("metric evaluation rejects non-SPD tensors") {
  ManifoldSpec s;
  s.dim = 2;
  s.metric = [](const Vec&) -> Mat {
    Mat g(2, 2);
    g << 1.0, 0.0, 0.0, -1.0;
    return g;
  };
  try {
    (void)metric_at(s, vec2(0, 0));
    FAIL("expected NotSPD");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotSPD);
  }
}

TEST_CASE("hyperbolic Christoffel symbols match the closed form") {
  const auto s = make_hyperbolic(2);
  const Vec x = vec2(1.3, 0.4);
  const auto G = christoffel(s, x);
  const double sh = std::sinh(1.3), ch = std::cosh(1.3);
  CHECK(G[0](1, 1) == doctest::Approx(-sh * ch).epsilon(1e-8));
  CHECK(G[1](0, 1) == doctest::Approx(ch / sh).epsilon(1e-8));
  CHECK(G[1](1, 0) == doctest::Approx(ch / sh).epsilon(1e-8));
  CHECK(std::abs(G[0](0, 0)) < 1e-12);
  CHECK(std::abs(G[1](1, 1)) < 1e-12);
}

TEST_CASE("flat exp and log are translations") {
  const auto s = make_flat(3);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 20; ++n) {
    Vec y(3), xi(3);
    for (int m = 0; m < 3; ++m) {
      y[m] = 5 * u(rng);
      xi[m] = u(rng);
    }
    const auto f = make_frame(s, y);
    const Vec x = exp_map(s, f, xi);
    CHECK((x - (y + xi)).norm() < 1e-12);
    CHECK((log_map(s, f, x) - xi).norm() < 1e-10);
    CHECK(geodesic_distance(s, y, x) == doctest::Approx(xi.norm()).epsilon(1e-12));
  }
}

TEST_CASE("chart domain is enforced") {
  const auto s = make_flat(2, 4.0);
  const auto f = make_frame(s, vec2(0, 0));
  CHECK_THROWS_AS((void)exp_map(s, f, vec2(3.5, 0)), Error);
}

TEST_CASE("hyperbolic geodesics preserve energy and length") {
  const auto s = make_hyperbolic(2);
  const Vec x = vec2(2.0, 1.0);
  const auto f = make_frame(s, x);
  for (double ang : {0.3, 1.2, 2.5, 4.0}) {
    const Vec xi = vec2(0.9 * std::cos(ang), 0.9 * std::sin(ang));
    IntegrationStats st;
    const Mat B = f.basis;
    (void)integrate_geodesic(s, x, B * xi, 1.0, &st);
    CHECK(st.energy_drift < 1e-8);
    const Vec y = exp_map(s, f, xi);
    CHECK(hyperbolic_distance(x, y) == doctest::Approx(0.9).epsilon(1e-7));
    CHECK((log_map(s, f, y) - xi).norm() < 1e-7);
  }
}

TEST_CASE("hyperbolic sectional curvature is -1") {
  const auto s = make_hyperbolic(2);
  for (double t : {0.8, 1.5, 3.0}) CHECK(sectional_curvature(s, vec2(t, 0.5), 0, 1) == doctest::Approx(-1.0).epsilon(1e-3));
  const auto s3 = make_hyperbolic(3);
  Vec x(3);
  x << 1.2, 1.0, 0.5;
  CHECK(sectional_curvature(s3, x, 0, 1) == doctest::Approx(-1.0).epsilon(1e-3));
  CHECK(sectional_curvature(s3, x, 1, 2) == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("conformal perturbation has the conformal Christoffel symbols") {
  // g = e^{2 phi} delta: Gamma^k_ij = d_i phi delta_jk + d_j phi delta_ik - d_k phi delta_ij.
  const double beta = 0.2, R = 2.0;
  const auto s = make_perturbed_flat(2, beta, R, vec2(0, 0));
  const Vec x = vec2(0.7, -0.4);
  auto phi = [&](const Vec& p) { return 0.5 * std::log(1.0 + beta * bump(p.norm() / R)); };
  Vec dphi(2);
  for (int m = 0; m < 2; ++m) {
    Vec a = x, b = x;
    a[m] += 1e-6;
    b[m] -= 1e-6;
    dphi[m] = (phi(a) - phi(b)) / 2e-6;
  }
  const auto G = christoffel(s, x);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double expect = dphi[i] * (j == k) + dphi[j] * (i == k) - dphi[k] * (i == j);
        CHECK(G[k](i, j) == doctest::Approx(expect).epsilon(1e-6).scale(1.0));
      }
  // Outside the perturbation the metric is Euclidean.
  const auto G2 = christoffel(s, vec2(3.0, 0.0));
  for (int k = 0; k < 2; ++k) CHECK(G2[k].norm() < 1e-12);
}

TEST_CASE("bounded geometry report") {
  const auto s = make_hyperbolic(2);
  std::vector<Vec> pts{vec2(1.0, 0.3), vec2(2.0, 2.0), vec2(0.5, 4.0)};
  const auto r = validate_bounded_geometry(s, pts);
  CHECK(r.samples == 3);
  CHECK(r.min_sectional == doctest::Approx(-1.0).epsilon(1e-3));
  CHECK(r.max_sectional == doctest::Approx(-1.0).epsilon(1e-3));
  const auto flat = make_flat(2);
  const auto rf = validate_bounded_geometry(flat, pts);
  CHECK(rf.max_riemann < 1e-8);
  CHECK(rf.declared_ok);
}

TEST_CASE("catalog lookup") {
  CHECK(catalog_ids().size() == 3);
  CHECK(flat_at_infinity("flat"));
  CHECK(flat_at_infinity("perturbed_flat"));
  CHECK_FALSE(flat_at_infinity("hyperbolic"));
  try {
    (void)make_catalog("sphere", 2, nlohmann::json::object());
    FAIL("expected ConstraintViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConstraintViolation);
  }
}
