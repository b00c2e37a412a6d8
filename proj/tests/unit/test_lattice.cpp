#include <doctest.h>

#include "conclab/error.hpp"
#include "conclab/lattice.hpp"

#include <cmath>
#include <filesystem>

using namespace conclab;

namespace {

// Brute-force count of integer points z with |z h| < r (or <= r).
std::size_t count_ball(int dim, double r, double h, bool closed) {
  const int n = static_cast<int>(std::floor(r / h)) + 1;
  std::size_t count = 0;
  if (dim == 2) {
    for (int a = -n; a <= n; ++a)
      for (int b = -n; b <= n; ++b) {
        const double d = std::hypot(a * h, b * h);
        count += closed ? d <= r : d < r;
      }
  } else {
    for (int a = -n; a <= n; ++a)
      for (int b = -n; b <= n; ++b)
        for (int c = -n; c <= n; ++c) {
          const double d = std::sqrt(a * a * h * h + b * b * h * h + c * c * h * h);
          count += closed ? d <= r : d < r;
        }
  }
  return count;
}

GridFunction sample(const Lattice& lat, double (*f)(double, double)) {
  auto g = GridFunction::zeros(lat);
  for (std::size_t idx : lat.active()) {
    const Vec p = lat.point(idx);
    g.values[idx] = f(p[0], p[1]);
  }
  return g;
}

double cubic(double x, double y) { return 1.0 + x - 2 * y + x * x * y - 3 * y * y * y + 0.5 * x * x * x; }
double bilinear(double x, double y) { return 2.0 - x + 3 * y + 0.7 * x * y; }
double quartic(double x, double y) { return x * x * x * x - 2 * x * y * y + y * y * y * y; }

}  // namespace

TEST_CASE("lattice ball membership matches brute force") {
  for (bool closed : {false, true}) {
    CHECK(Lattice(2, 1.0, 0.1, closed).active().size() == count_ball(2, 1.0, 0.1, closed));
    CHECK(Lattice(2, 1.0, 0.25, closed).active().size() == count_ball(2, 1.0, 0.25, closed));
    CHECK(Lattice(3, 0.8, 0.2, closed).active().size() == count_ball(3, 0.8, 0.2, closed));
  }
}

TEST_CASE("lattice index and coordinate roundtrip") {
  const Lattice lat(2, 1.0, 0.2);
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    const auto z = lat.coords(idx);
    REQUIRE(lat.index_of(z).has_value());
    CHECK(*lat.index_of(z) == idx);
    CHECK(lat.point(idx)[0] == doctest::Approx(z[0] * 0.2));
  }
  CHECK_FALSE(lat.index_of({lat.half() + 1, 0, 0, 0}).has_value());
  CHECK(lat.same_as(Lattice(2, 1.0, 0.2)));
  CHECK_FALSE(lat.same_as(Lattice(2, 1.0, 0.1)));
}

TEST_CASE("binary payload roundtrip preserves values and hash") {
  const Lattice lat(2, 1.0, 0.1);
  const auto f = sample(lat, cubic);
  const auto bytes = encode_binary(f);
  const auto g = decode_binary(bytes);
  REQUIRE(g.lattice.same_as(lat));
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (std::isnan(f.values[i])) CHECK(std::isnan(g.values[i]));
    else CHECK(g.values[i] == f.values[i]);
  }
  CHECK(content_hash(f) == content_hash(g));
  CHECK(content_hash(f).size() == 16);
  auto h = f;
  h.values[lat.active().front()] += 1e-12;
  CHECK(content_hash(h) != content_hash(f));

  const auto path = std::filesystem::temp_directory_path() / "conclab_lattice_roundtrip.bin";
  write_binary(f, path);
  const auto r = read_binary(path);
  CHECK(content_hash(r) == content_hash(f));
  std::filesystem::remove(path);
}

TEST_CASE("interpolation reproduces polynomials of its degree") {
  const Lattice lat(2, 1.0, 0.05);
  const auto fc = sample(lat, cubic);
  const auto fl = sample(lat, bilinear);
  for (double x : {-0.41, 0.0, 0.123, 0.5}) {
    for (double y : {-0.3, 0.017, 0.44}) {
      Vec p(2);
      p << x, y;
      double out = 0.0;
      REQUIRE(interpolate_cubic(lat, fc.values, 1, p, &out));
      CHECK(out == doctest::Approx(cubic(x, y)).epsilon(1e-12));
      REQUIRE(interpolate_linear(lat, fl.values, 1, p, &out));
      CHECK(out == doctest::Approx(bilinear(x, y)).epsilon(1e-12));
    }
  }
  Vec outside(2);
  outside << 0.999, 0.0;
  double out = 0.0;
  CHECK_FALSE(interpolate_cubic(lat, fc.values, 1, outside, &out));
}

TEST_CASE("lattice derivatives are exact on low-degree polynomials") {
  const Lattice lat(2, 1.0, 0.05);
  const auto f = sample(lat, quartic);
  const auto c = lat.index_of({4, -6, 0, 0});
  REQUIRE(c.has_value());
  const Vec p = lat.point(*c);
  const double x = p[0], y = p[1];
  double d = 0.0;
  REQUIRE(lattice_derivative(lat, f.values, 1, {}, *c, 0, &d));
  CHECK(d == doctest::Approx(4 * x * x * x - 2 * y * y).epsilon(1e-10));
  REQUIRE(lattice_derivative(lat, f.values, 1, {}, *c, 1, &d));
  CHECK(d == doctest::Approx(-4 * x * y + 4 * y * y * y).epsilon(1e-10));

  const auto g = sample(lat, cubic);
  double dd = 0.0;
  REQUIRE(lattice_second_derivative(lat, g.values, 1, {}, *c, 0, 1, &dd));
  CHECK(dd == doctest::Approx(2 * x).epsilon(1e-8).scale(1.0));
}

TEST_CASE("one-sided derivatives near the mask edge") {
  const Lattice lat(2, 1.0, 0.1);
  const auto f = sample(lat, bilinear);
  const auto edge = lat.index_of({9, 0, 0, 0});
  REQUIRE(edge.has_value());
  REQUIRE(lat.inside(*edge));
  double d = 0.0;
  REQUIRE(lattice_derivative(lat, f.values, 1, {}, *edge, 0, &d));
  CHECK(d == doctest::Approx(-1.0).epsilon(1e-10));
}
