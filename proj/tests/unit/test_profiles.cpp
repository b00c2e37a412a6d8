#include <doctest.h>

#include "conclab/bump.hpp"
#include "conclab/catalog.hpp"
#include "conclab/config.hpp"
#include "conclab/error.hpp"
#include "conclab/profiles.hpp"
#include "conclab/sequences.hpp"
#include "conclab/verification.hpp"

#include <cmath>
#include <memory>

using namespace conclab;
using namespace conclab::profiles;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Traveling bump on flat R^2 with the trailing system of the bump centers.
struct FlatFixture {
  static constexpr double kR = 0.6;
  geometry::ManifoldSpec spec = geometry::make_flat(2);
  double rho = 8.0 / 12.0;
  discretization::Discretization disc;
  std::unique_ptr<PartitionOfUnity> pou;
  std::unique_ptr<ChartSampler> sampler;
  std::unique_ptr<TestBank> bank;
  SequenceFamily family;
  TrailingSystem trailing;
  std::vector<int> ks{1, 2, 4, 8};

  FlatFixture() {
    disc = discretization::build(spec, discretization::Region::box(vec2(-2, -3), vec2(12, 3)), 0.5, rho);
    pou = std::make_unique<PartitionOfUnity>(build_partition(spec, disc, rho, -1.0));
    sampler = std::make_unique<ChartSampler>(*pou, rho / 24);
    bank = std::make_unique<TestBank>(sampler->lattice(), rho, 4.0);
    family = sequences::make_family("traveling_bump", 2, {{"radius", kR}, {"velocity", {1.0, 0.0}}});
    std::vector<std::size_t> core;
    for (int k : ks) {
      std::size_t best = 0;
      for (std::size_t i = 0; i < disc.size(); ++i)
        if ((disc.points[i] - vec2(k, 0)).norm() < (disc.points[best] - vec2(k, 0)).norm()) best = i;
      core.push_back(best);
    }
    trailing = discretization::trailing_system(spec, disc, core, ks, 8);
  }
};

}  // namespace

TEST_CASE("chart value is multilinear and renormalized at the mask edge") {
  const Lattice lat(2, 1.0, 0.1);
  auto f = GridFunction::zeros(lat);
  for (std::size_t idx : lat.active()) f.values[idx] = 1.0 + 2.0 * lat.point(idx)[0] - lat.point(idx)[1];
  CHECK(chart_value(f, vec2(0.234, -0.117)) == doctest::Approx(1.0 + 0.468 + 0.117).epsilon(1e-12));
  const auto c = GridFunction::zeros(lat);
  CHECK(chart_value(c, vec2(0.5, 0.5)) == 0.0);
  auto one = GridFunction::zeros(lat);
  for (std::size_t idx : lat.active()) one.values[idx] = 1.0;
  CHECK(chart_value(one, vec2(0.995, 0.0)) == doctest::Approx(1.0));
  CHECK(chart_value(one, vec2(3.0, 0.0)) == 0.0);
}

TEST_CASE("flat traveling bump: local profiles, gluing and global profile") {
  FlatFixture fx;
  atlas::AtlasOptions ao;
  const auto at = atlas::build_atlas(*fx.sampler, fx.trailing, ao);
  CHECK(at.quality.cocycle_ok);
  CHECK(at.quality.flat_deviation < 1e-6);

  const auto pa = extract_local_profiles(fx.family, *fx.sampler, fx.trailing, *fx.bank, 1e-3);
  REQUIRE(pa.entries.size() == 9);
  CHECK(pa.count(LimitStatus::Undetermined) == 0);

  // Oracle: w_i(xi) = b(|y_i + xi - c_K| / R) at the last schedule entry.
  const std::size_t last = fx.ks.size() - 1;
  const Vec cK = vec2(fx.ks.back(), 0);
  std::vector<GridFunction> oracle;
  for (int i = 0; i <= 8; ++i) {
    const Vec y = fx.disc.points[fx.trailing.order[last][static_cast<std::size_t>(i)]];
    auto g = GridFunction::zeros(fx.sampler->lattice());
    for (std::size_t idx : g.lattice.active()) g.values[idx] = bump((y + g.lattice.point(idx) - cK).norm() / FlatFixture::kR);
    oracle.push_back(g);
  }
  const auto gp = assemble_global(pa, at, 5e-3);
  CHECK(gp.compat_residual < 1e-10);
  CHECK(gp.scale == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(atlas::relative_l2_on_infinity(at, gp.chart_values, oracle) < 1e-12);

  SUBCASE("norms on the manifold at infinity match the analytic bump norms") {
    // Lattice quadrature error at R / h = 21.6 is about 1.5e-3 relative.
    const auto nm = atlas::norms_on_infinity(at, gp.chart_values, 4.0);
    const double l2 = sequences::bump_l2_square(2, FlatFixture::kR, 1.0);
    const double g2 = sequences::bump_grad_square(2, FlatFixture::kR, 1.0);
    CHECK(nm.h12_square == doctest::Approx(l2 + g2).epsilon(3e-3));
    CHECK(nm.lp_power == doctest::Approx(sequences::bump_lp_power(2, FlatFixture::kR, 1.0, 4.0)).epsilon(2e-3));
  }
  SUBCASE("a corrupted local profile is incompatible") {
    auto bad = pa;
    for (double& v : bad.entries[1].values) v += 0.1;
    try {
      (void)assemble_global(bad, at, 5e-3);
      FAIL("expected IncompatibleProfiles");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IncompatibleProfiles);
    }
    CHECK(compat_residual(bad.entries, at) == doctest::Approx(0.1).epsilon(1e-6));
  }
  SUBCASE("elementary concentration rebuilds the sequence element") {
    for (std::size_t s = 1; s < fx.ks.size(); ++s) {
      const auto W = elementary_concentration(gp, fx.trailing, *fx.pou, s);
      const Vec c = vec2(fx.ks[s], 0);
      // Lattice offsets: every chart center lies on the epsilon grid, a multiple of h.
      const double h = fx.sampler->spacing();
      for (const Vec& off : {vec2(0, 0), vec2(2 * h, -h), vec2(-h, 3 * h)})
        CHECK(W(c + off) == doctest::Approx(bump(off.norm() / FlatFixture::kR)).epsilon(1e-9));
    }
  }
}

TEST_CASE("oscillating energy shows up as Plancherel slack") {
  // u_k = traveling bump + sin(w_k x_1) b(|x - c| / R) / w_k. The oscillating
  // part tends to zero weakly while its energy tends to (1/2) int b^2.
  auto cfg = config::load_config(CONCLAB_SCENARIO_DIR "/oscillating.json");
  const auto r = verification::run_suite(cfg);
  REQUIRE_FALSE(r.hard_failure());
  REQUIRE(r.report.has_value());
  const double E = 0.5 * sequences::bump_l2_square(2, 0.6, 1.0);
  CHECK(r.report->branches.size() == 1);
  CHECK(r.report->plancherel.slack >= 0.9 * E);
  CHECK(r.report->plancherel.slack >= -cfg.tol.tol_energy * r.report->plancherel.rhs);
}

TEST_CASE("stationary bump is captured by the weak limit") {
  auto cfg = config::load_config(CONCLAB_SCENARIO_DIR "/fixed_bump.json");
  const auto r = verification::run_suite(cfg);
  REQUIRE(r.report.has_value());
  CHECK(r.report->branches.empty());
  CHECK(r.report->w0_h12_square ==
        doctest::Approx(sequences::bump_l2_square(2, 0.6, 1.0) + sequences::bump_grad_square(2, 0.6, 1.0)).epsilon(2e-3));
  CHECK(r.report->remainder_curve.back() < 1e-8);
}
