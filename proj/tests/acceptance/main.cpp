// Acceptance suite: one line per criterion, exit status 1 when any fails.

#include "conclab/app.hpp"
#include "conclab/bump.hpp"
#include "conclab/catalog.hpp"
#include "conclab/config.hpp"
#include "conclab/curvature.hpp"
#include "conclab/error.hpp"
#include "conclab/geodesic.hpp"
#include "conclab/partition.hpp"
#include "conclab/report.hpp"
#include "conclab/sequences.hpp"
#include "conclab/spotlight.hpp"
#include "conclab/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace conclab;

namespace {

// Pinned tolerances.
constexpr double kRoundtripTol = 1e-7;
constexpr double kRadialTol = 1e-5;
constexpr double kCurvatureTol = 1e-3;
constexpr double kMaxMultiplicity = 7;
constexpr double kAffineTol = 1e-6;
constexpr double kCocycleTol = 1e-5;
constexpr double kFlatMetricTol = 1e-6;
constexpr double kEscapeMetricTol = 1e-3;
constexpr double kGeometricRatio = 0.5;
constexpr double kProfileL2Tol = 1e-2;
constexpr double kRemainderTol = 5e-2;
constexpr double kSlackLow = -2e-2;
constexpr double kSlackHigh = 5e-2;
constexpr double kBrezisLiebTol = 2e-2;
constexpr double kSeparationGrowth = 4.0;
constexpr double kSoundnessFactor = 10.0;
constexpr double kTrackedFraction = 0.5;
constexpr double kQuadratureTol = 1e-3;
constexpr double kHalvingFactor = 4.0;
constexpr double kMinOrder = 1.8;

const fs::path kScenarios = CONCLAB_SCENARIO_DIR;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Vec vec_of(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Vec param_vec(const nlohmann::json& p, const char* key, int dim, const Vec& dflt) {
  if (!p.contains(key)) return dflt;
  const auto xs = p.at(key).get<std::vector<double>>();
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = xs[static_cast<std::size_t>(i)];
  return v;
}

// A scenario run together with the objects needed by oracles. The
// discretization is deterministic, so rebuilding it reproduces the run.
struct Pipeline {
  config::ScenarioConfig cfg;
  geometry::ManifoldSpec spec;
  spotlight::SequenceFamily family;
  discretization::Discretization disc;
  std::unique_ptr<profiles::PartitionOfUnity> pou;
  std::unique_ptr<spotlight::ChartSampler> sampler;
  std::unique_ptr<spotlight::TestBank> bank;
  verification::SuiteResult result;

  const profiles::DecompositionReport& report() const { return *result.report; }
};

std::unique_ptr<Pipeline> make_pipeline(const config::ScenarioConfig& cfg, bool run = true) {
  auto p = std::make_unique<Pipeline>();
  p->cfg = cfg;
  p->spec = geometry::make_catalog(cfg.catalog_id, cfg.dim, cfg.manifold_params);
  p->family = sequences::make_family(cfg.family_id, cfg.dim, cfg.sequence_params);
  p->disc = discretization::build(p->spec, verification::scenario_region(cfg, p->family), cfg.epsilon, cfg.rho);
  p->pou = std::make_unique<profiles::PartitionOfUnity>(profiles::build_partition(p->spec, p->disc, cfg.rho, -1.0));
  p->sampler = std::make_unique<spotlight::ChartSampler>(*p->pou, cfg.spacing);
  p->bank = std::make_unique<spotlight::TestBank>(p->sampler->lattice(), cfg.rho, cfg.p);
  if (run) {
    p->result = verification::run_suite(cfg);
    if (p->result.hard_failure()) {
      const auto& e = p->result.errors.front();
      fail(ErrorCode::InvalidArgument, "stage " + e.stage + " failed: " + e.message);
    }
  }
  return p;
}

config::ScenarioConfig scenario(const std::string& name) { return config::load_config(kScenarios / (name + ".json")); }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const fs::path& config, const fs::path& out) {
  fs::remove_all(out);
  app::RunOptions o;
  o.out = out;
  o.quiet = true;
  std::ostringstream so, se;
  return app::run(config, o, so, se);
}

fs::path scratch(const std::string& name) {
  return fs::temp_directory_path() / ("conclab_acceptance_" + std::to_string(::getpid())) / name;
}

// Criterion 1.
Outcome geometry_oracles() {
  Outcome o;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int dim : {2, 3}) {
    for (bool shortcut : {true, false}) {
      auto s = geometry::make_flat(dim);
      s.numerics.use_euclidean_shortcut = shortcut;
      const double a = s.chart_radius();
      double worst = 0.0;
      for (int n = 0; n < 100; ++n) {
        Vec y(dim), xi(dim);
        for (int m = 0; m < dim; ++m) y[m] = 5.0 * u(rng);
        do {
          for (int m = 0; m < dim; ++m) xi[m] = a * u(rng);
        } while (xi.norm() >= a);
        const auto f = geometry::make_frame(s, y);
        const Vec x = geometry::exp_map(s, f, xi);
        worst = std::max({worst, (geometry::log_map(s, f, x) - xi).norm(), (x - (y + xi)).norm()});
      }
      o.require(worst < kRoundtripTol, "flat R^" + std::to_string(dim) + " roundtrip");
      o.note("R^" + std::to_string(dim) + (shortcut ? "" : " (ODE)") + " roundtrip " + fmt(worst));
    }
  }
  // Radial geodesics of H^2 in polar coordinates: (t0, th) -> (t0 + s, th).
  const auto h2 = geometry::make_hyperbolic(2);
  const double a = h2.chart_radius();
  std::uniform_real_distribution<double> ut(1.6, 3.0), uth(0.5, 2.5), us(-1.0, 1.0);
  double radial = 0.0;
  for (int n = 0; n < 100; ++n) {
    const Vec x = vec_of({ut(rng), uth(rng)});
    const double sgo = 0.99 * a * us(rng);
    const auto f = geometry::make_frame(h2, x);
    const Vec y = geometry::exp_map(h2, f, vec_of({sgo, 0.0}));
    radial = std::max(radial, (y - vec_of({x[0] + sgo, x[1]})).norm());
  }
  o.require(radial < kRadialTol, "H^2 radial endpoints");
  o.note("H^2 radial " + fmt(radial));
  std::vector<Vec> pts;
  for (int n = 0; n < 40; ++n) pts.push_back(vec_of({ut(rng), uth(rng)}));
  const auto cr = geometry::validate_bounded_geometry(h2, pts);
  const double cdev = std::max(std::abs(cr.min_sectional + 1.0), std::abs(cr.max_sectional + 1.0));
  o.require(cdev < kCurvatureTol, "H^2 curvature");
  o.note("curvature in [" + fmt(cr.min_sectional) + ", " + fmt(cr.max_sectional) + "]");
  return o;
}

// Criterion 2.
Outcome discretization_properties() {
  Outcome o;
  const auto s = geometry::make_flat(2);
  const double eps = 1.0;
  const auto d = discretization::build(s, discretization::Region::box(vec_of({-10, -10}), vec_of({10, 10})), eps,
                                       eps / 0.75);
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) min_sep = std::min(min_sep, (d.points[i] - d.points[j]).norm());
  o.require(min_sep >= eps, "separation");
  double cover = 0.0;
  for (int a = -100; a <= 100; ++a)
    for (int b = -100; b <= 100; ++b) {
      const Vec x = vec_of({0.1 * a, 0.1 * b});
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : d.points) best = std::min(best, (p - x).norm());
      cover = std::max(cover, best);
    }
  o.require(cover <= eps, "covering");
  const int mult = discretization::covering_multiplicity(s, d, 1.0);
  o.require(mult <= kMaxMultiplicity, "multiplicity");

  std::vector<int> ks;
  std::vector<std::size_t> core;
  for (int k = 1; k <= 32; ++k) {
    ks.push_back(k);
    const Vec c = vec_of({-9.0 + 0.5 * k, -5.0 + 0.3 * k});
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.size(); ++i)
      if ((d.points[i] - c).norm() < (d.points[best] - c).norm()) best = i;
    core.push_back(best);
  }
  const int I = 25;
  const auto t = discretization::trailing_system(s, d, core, ks, I);
  std::size_t bad = 0;
  for (std::size_t k = 0; k < ks.size(); ++k) {
    std::vector<double> all;
    for (const auto& p : d.points) all.push_back((p - d.points[core[k]]).norm());
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i <= I; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double di = all[t.order[k][ui]];
      if (std::abs(di - sorted[ui]) > 1e-12 || std::abs(t.dist[k][ui] - di) > 1e-12) ++bad;
      if (i > 0 && t.dist[k][ui] < t.dist[k][ui - 1]) ++bad;
    }
  }
  o.require(bad == 0, "trailing monotonicity");
  o.note(std::to_string(d.size()) + " points, min separation " + fmt(min_sep) + ", covering radius " + fmt(cover) +
         ", multiplicity " + std::to_string(mult) + ", trailing mismatches " + std::to_string(bad));
  return o;
}

// Largest deviation of a sampled map from the best affine fit, and of the
// fitted linear part from an orthogonal matrix.
std::pair<double, double> affine_isometry_error(const atlas::GridMap& g) {
  const int n = g.components;
  std::vector<std::size_t> idx;
  for (std::size_t i : g.lattice.active())
    if (g.defined[i]) idx.push_back(i);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), n + 1), Y(static_cast<Eigen::Index>(idx.size()), n);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const Vec p = g.lattice.point(idx[r]);
    const Vec v = g.at(idx[r]);
    for (int m = 0; m < n; ++m) {
      X(static_cast<Eigen::Index>(r), m) = p[m];
      Y(static_cast<Eigen::Index>(r), m) = v[m];
    }
    X(static_cast<Eigen::Index>(r), n) = 1.0;
  }
  const Eigen::MatrixXd C = X.colPivHouseholderQr().solve(Y);
  const double fit = (X * C - Y).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd A = C.topRows(n).transpose();
  const double orth = (A.transpose() * A - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  return {fit, orth};
}

double metric_identity_deviation(const atlas::InfinityAtlas& at) {
  const int n = at.dim;
  double worst = 0.0;
  for (const auto& mf : at.metrics)
    for (std::size_t idx : at.chart_lattice.active())
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          worst = std::max(worst, std::abs(mf.g[(idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)) *
                                                     static_cast<std::size_t>(n) +
                                                 static_cast<std::size_t>(b)] -
                                           (a == b ? 1.0 : 0.0)));
  return worst;
}

// Criterion 3.
Outcome flat_atlas(const Pipeline& p) {
  Outcome o;
  const auto& r = p.report();
  o.require(!r.branches.empty() && r.branches.front().atlas, "an atlas was built");
  if (!o.ok) return o;
  const auto& at = *r.branches.front().atlas;
  double fit = 0.0, orth = 0.0;
  for (const auto& [pair, g] : at.gluing.psi) {
    const auto [f, q] = affine_isometry_error(g);
    fit = std::max(fit, f);
    orth = std::max(orth, q);
  }
  o.require(!at.gluing.psi.empty(), "transition maps present");
  o.require(fit < kAffineTol && orth < kAffineTol, "psi affine isometries");
  o.require(at.quality.triples_checked > 0 && at.quality.cocycle_residual < kCocycleTol, "cocycle");
  const double gdev = metric_identity_deviation(at);
  o.require(gdev < kFlatMetricTol, "limit metric = identity");
  o.note(std::to_string(at.gluing.psi.size()) + " maps, affine fit " + fmt(fit) + ", orthogonality " + fmt(orth) +
         ", cocycle " + fmt(at.quality.cocycle_residual) + " over " + std::to_string(at.quality.triples_checked) +
         " triples, |g - I| " + fmt(gdev));
  return o;
}

// Criterion 4.
Outcome perturbation_escape(const Pipeline& p) {
  Outcome o;
  const auto& r = p.report();
  o.require(!r.branches.empty() && r.branches.front().atlas, "an atlas was built");
  if (!o.ok) return o;
  const auto& at = *r.branches.front().atlas;
  const double tol_c2 = p.cfg.tol.tol_c2;
  const double floor = 1e-3 * tol_c2;
  std::size_t converged = 0, in_k = 0;
  bool geometric = true;
  double worst_ratio = 0.0;
  std::string worst_pair;
  for (const auto& [pair, st] : at.gluing.status) {
    if (!at.gluing.in_k(pair.first, pair.second)) continue;
    ++in_k;
    converged += st == atlas::TransitionStatus::Converged;
    const auto& inc = at.gluing.increments.at(pair);
    for (std::size_t s = 1; s < inc.size(); ++s)
      if (std::isfinite(inc[s - 1]) && inc[s - 1] > floor) {
        const double ratio = inc[s] / inc[s - 1];
        geometric = geometric && ratio <= kGeometricRatio;
        if (!(ratio <= worst_ratio)) {
          worst_ratio = ratio;
          worst_pair = "(" + std::to_string(pair.first) + "," + std::to_string(pair.second) + ") at step " +
                       std::to_string(s) + ": " + fmt(inc[s - 1]) + " -> " + fmt(inc[s]);
        }
      }
  }
  o.require(in_k > 0 && converged == in_k, "all computed maps in K are C^2-Cauchy");
  o.require(geometric, "increments decrease geometrically");
  const double gdev = metric_identity_deviation(at);
  o.require(gdev < kEscapeMetricTol, "limit metric within 1e-3 of identity");
  std::string incs;
  for (double v : at.gluing.step_increments) incs += (incs.empty() ? "" : " ") + fmt(v);
  o.note(std::to_string(converged) + "/" + std::to_string(in_k) + " maps converged, step increments [" + incs +
         "], worst ratio " + fmt(worst_ratio) + " " + worst_pair + ", |g - I| " + fmt(gdev));
  return o;
}

// w_i(xi) = A b(|y_i + xi - c_K| / R) on flat space at the final schedule entry.
std::vector<GridFunction> traveling_bump_oracle(const Pipeline& p, const profiles::Branch& b, const Vec& c0,
                                                const Vec& v, double A, double R) {
  const std::size_t last = b.trailing.k_schedule.size() - 1;
  const Vec cK = c0 + b.trailing.k_schedule.back() * v;
  std::vector<GridFunction> out;
  for (int i = 0; i <= b.trailing.i_max; ++i) {
    const Vec y = p.disc.points[b.trailing.order[last][static_cast<std::size_t>(i)]];
    auto g = GridFunction::zeros(p.sampler->lattice());
    for (std::size_t idx : g.lattice.active()) g.values[idx] = A * bump((y + g.lattice.point(idx) - cK).norm() / R);
    out.push_back(std::move(g));
  }
  return out;
}

// Criterion 5.
Outcome one_bump(const Pipeline& p) {
  Outcome o;
  const auto& r = p.report();
  o.require(r.branches.size() == 1, "exactly one branch");
  if (r.branches.empty() || !r.branches.front().complete()) return o;
  const auto& b = r.branches.front();
  const auto& sp = p.cfg.sequence_params;
  const int n = p.cfg.dim;
  Vec e1 = Vec::Zero(n);
  e1[0] = 1.0;
  const auto oracle = traveling_bump_oracle(p, b, param_vec(sp, "center", n, Vec::Zero(n)),
                                            param_vec(sp, "velocity", n, e1), sp.value("amplitude", 1.0),
                                            sp.value("radius", 0.6));
  const double rel = atlas::relative_l2_on_infinity(*b.atlas, b.profile.chart_values, oracle);
  o.require(rel < kProfileL2Tol, "profile relative L2");
  const double rem = r.remainder_curve.back() / r.u_lp.back();
  o.require(rem < kRemainderTol, "final remainder");
  const double slack = r.plancherel.slack / r.plancherel.rhs;
  o.require(slack >= kSlackLow && slack <= kSlackHigh, "Plancherel near-equality");
  o.require(r.brezis_lieb.relative_error < kBrezisLiebTol, "Brezis-Lieb");
  o.note("profile L2 " + fmt(rel) + ", remainder " + fmt(rem) + ", slack/rhs " + fmt(slack) + ", BL " +
         fmt(r.brezis_lieb.relative_error));
  return o;
}

// Criterion 6.
Outcome two_bumps(const Pipeline& p) {
  Outcome o;
  const auto& r = p.report();
  o.require(r.branches.size() == 2, "exactly two branches");
  const auto& c = r.separation_curve;
  bool strict = c.size() == r.k_schedule.size();
  for (std::size_t s = 1; s < c.size(); ++s) strict = strict && c[s] > c[s - 1];
  o.require(strict, "separation strictly increasing");
  const double growth = c.empty() || c.front() <= 0.0 ? 0.0 : c.back() / c.front();
  o.require(growth >= kSeparationGrowth, "separation growth");
  o.require(r.brezis_lieb.relative_error < kBrezisLiebTol, "Brezis-Lieb");
  std::string sep;
  for (double v : c) sep += (sep.empty() ? "" : " ") + fmt(v);
  o.note("separation [" + sep + "], growth " + fmt(growth) + ", BL " + fmt(r.brezis_lieb.relative_error));
  return o;
}

// Criterion 7.
Outcome spotlight_consistency(const Pipeline& flattening, const Pipeline& travel) {
  Outcome o;
  const auto& cf = flattening.cfg;
  const auto v = spotlight::spotlight_test(flattening.family, *flattening.sampler, *flattening.bank, cf.k_schedule,
                                           cf.p, cf.tol.spotlight_decay);
  o.require(v.lp_decays && v.pairings_small, "flattening pairings decay with L^p");
  const double bound = kSoundnessFactor * v.lp_norms.back() * v.bank_constant;
  o.require(v.max_pairings.back() < bound, "final pairing below 10 x L^p x bank constant");
  o.note("flattening: L^p " + fmt(v.lp_norms.front()) + " -> " + fmt(v.lp_norms.back()) + ", max pairing " +
         fmt(v.max_pairings.front()) + " -> " + fmt(v.max_pairings.back()) + " (bound " + fmt(bound) + ")");

  // Reference: the bump centered in a chart, paired with the bank.
  const auto& ct = travel.cfg;
  const double A = ct.sequence_params.value("amplitude", 1.0), R = ct.sequence_params.value("radius", 0.6);
  const auto& lat = travel.sampler->lattice();
  auto centered = GridFunction::zeros(lat);
  for (std::size_t idx : lat.active()) centered.values[idx] = A * bump(lat.point(idx).norm() / R);
  double ref = 0.0;
  for (double q : spotlight::bank_pairings(lat, centered.values, *travel.bank)) ref = std::max(ref, std::abs(q));
  const auto w = spotlight::spotlight_test(travel.family, *travel.sampler, *travel.bank, ct.k_schedule, ct.p,
                                           ct.tol.spotlight_decay);
  const double worst = *std::min_element(w.tracked_pairings.begin(), w.tracked_pairings.end());
  o.require(worst >= kTrackedFraction * ref, "tracked pairing >= 0.5 x reference");
  o.note("translating bump: min tracked pairing " + fmt(worst) + " vs reference " + fmt(ref));
  return o;
}

// Criterion 8.
Outcome quadrature_study() {
  Outcome o;
  // Oracle study: bump norms on M through the partition of unity against
  // radial quadrature, at h = rho / 6, rho / 12, rho / 24, rho / 48.
  auto cfg = scenario("fixed_bump");
  const double R = cfg.sequence_params.value("radius", 0.6);
  const double l2 = sequences::bump_l2_square(cfg.dim, R, 1.0);
  const double h1 = l2 + sequences::bump_grad_square(cfg.dim, R, 1.0);
  const double lp = std::pow(sequences::bump_lp_power(cfg.dim, R, 1.0, cfg.p), 1.0 / cfg.p);
  std::vector<double> e_h1, e_lp;
  std::string levels;
  for (int div : {6, 12, 24, 48}) {
    cfg.spacing = cfg.rho / div;
    const auto p = make_pipeline(cfg, false);
    const spotlight::ScalarFn u = [&p](const Vec& x) { return p->family.generator(1, x); };
    const auto charts = p->sampler->charts_meeting(p->family.support_hint(1));
    const double nh1 = spotlight::h12_norm_M(*p->sampler, u, charts);
    const double nlp = spotlight::lp_norm_M(*p->sampler, u, cfg.p, charts);
    e_h1.push_back(std::abs(nh1 * nh1 - h1) / h1);
    e_lp.push_back(std::abs(nlp - lp) / lp);
    levels += (levels.empty() ? "" : " ") + fmt(e_h1.back());
  }
  std::string orders;
  for (std::size_t s = 1; s < e_h1.size(); ++s) {
    const double q = std::log2(e_h1[s - 1] / e_h1[s]);
    orders += (orders.empty() ? "" : " ") + fmt(q);
    o.require(q >= kMinOrder, "H^{1,2} order at refinement " + std::to_string(s));
  }
  o.note("H^{1,2} errors [" + levels + "], orders [" + orders + "], L^p error at rho/48 " + fmt(e_lp.back()));
  o.require(e_lp.back() < kQuadratureTol, "L^p quadrature");

  // Full pipeline at h and h / 2: every reported norm moves by < 4 x tolerance.
  auto base = scenario("flat_one_bump");
  auto fine = base;
  fine.spacing = base.spacing / 2;
  const auto ra = verification::run_suite(base);
  const auto rb = verification::run_suite(fine);
  if (ra.hard_failure() || rb.hard_failure()) {
    o.require(false, "pipeline runs");
    return o;
  }
  const auto& A = *ra.report;
  const auto& B = *rb.report;
  std::vector<std::pair<std::string, std::pair<double, double>>> norms{
      {"||u||_p", {A.u_lp.back(), B.u_lp.back()}},
      {"||u||^2_H", {A.u_h12_square.back(), B.u_h12_square.back()}},
      {"Plancherel lhs", {A.plancherel.lhs, B.plancherel.lhs}},
      {"Plancherel rhs", {A.plancherel.rhs, B.plancherel.rhs}},
      {"Brezis-Lieb rhs", {A.brezis_lieb.rhs, B.brezis_lieb.rhs}}};
  if (!A.branches.empty() && !B.branches.empty()) {
    norms.push_back({"profile H", {A.branches[0].norms.h12, B.branches[0].norms.h12}});
    norms.push_back({"profile L^p", {A.branches[0].norms.lp, B.branches[0].norms.lp}});
  } else {
    o.require(false, "branches at both spacings");
  }
  double worst = 0.0;
  std::string which;
  for (const auto& [name, ab] : norms) {
    const double rel = std::abs(ab.first - ab.second) / std::max(std::abs(ab.second), 1e-300);
    if (rel >= worst) {
      worst = rel;
      which = name;
    }
  }
  o.require(worst < kHalvingFactor * kQuadratureTol, "halving h");
  o.note("halving h: largest relative change " + fmt(worst) + " (" + which + ")");
  return o;
}

// Criterion 9.
Outcome negative_controls(const Pipeline& p) {
  Outcome o;
  const auto& b = p.report().branches.front();
  auto bad = b.local;
  for (double& v : bad.entries[1].values) v += 0.1;
  bool raised = false;
  try {
    (void)profiles::assemble_global(bad, *b.atlas, p.cfg.tol.tol_profile);
  } catch (const Error& e) {
    raised = e.code() == ErrorCode::IncompatibleProfiles;
  }
  o.require(raised, "corrupted profile raises IncompatibleProfiles");

  const auto out = scratch("negative");
  const int code_n = run_cli(kScenarios / "negative_no_extraction.json", out);
  o.require(code_n == app::kCheckFailure, "N_max = 0 exits 1");
  bool remainder_failed = false;
  if (fs::exists(out / "verdicts.json")) {
    const auto vj = nlohmann::json::parse(read_file(out / "verdicts.json"));
    for (const auto& v : vj)
      if (v.at("name") == "remainder_decay") remainder_failed = v.at("status") == "fail";
  }
  o.require(remainder_failed, "remainder check is the failing verdict");
  const int code_r = run_cli(kScenarios / "invalid" / "rho_too_large.json", scratch("rho"));
  o.require(code_r == app::kConfigError, "rho >= r(M)/8 exits 3");
  o.note("IncompatibleProfiles " + std::string(raised ? "raised" : "missing") + ", exit codes " +
         std::to_string(code_n) + " and " + std::to_string(code_r));
  return o;
}

// Criterion 10.
Outcome determinism() {
  Outcome o;
  for (const char* name : {"flat_one_bump", "flat_two_bump"}) {
    const auto cfg = kScenarios / (std::string(name) + ".json");
    const auto d1 = scratch(std::string(name) + "_1"), d2 = scratch(std::string(name) + "_2");
    const int c1 = run_cli(cfg, d1), c2 = run_cli(cfg, d2);
    const auto b1 = read_file(d1 / "report.json"), b2 = read_file(d2 / "report.json");
    o.require(c1 == 0 && c2 == 0, std::string(name) + " runs succeed");
    o.require(!b1.empty() && b1 == b2, std::string(name) + " report bytes identical");
    o.note(std::string(name) + ": " + std::to_string(b1.size()) + " bytes, " + (b1 == b2 ? "identical" : "differ"));
  }
  return o;
}

}  // namespace

// Optional arguments select criteria by number; all run by default.
int main(int argc, char** argv) {
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));
  std::map<std::string, std::unique_ptr<Pipeline>> cache;
  auto pipeline = [&cache](const std::string& name) -> const Pipeline& {
    auto& slot = cache[name];
    if (!slot) slot = make_pipeline(scenario(name));
    return *slot;
  };

  struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria{
      {1, "geometry oracles", 30, geometry_oracles},
      {2, "discretization properties", 30, discretization_properties},
      {3, "flat atlas", 120, [&] { return flat_atlas(pipeline("flat_one_bump")); }},
      {4, "compact perturbation escape", 180, [&] { return perturbation_escape(pipeline("perturbed_flat_escape")); }},
      {5, "one-bump decomposition", 300, [&] { return one_bump(pipeline("flat_one_bump")); }},
      {6, "two-bump decoupling", 480, [&] { return two_bumps(pipeline("flat_two_bump")); }},
      {7, "spotlight consistency", 120,
       [&] { return spotlight_consistency(pipeline("flattening"), pipeline("flat_one_bump")); }},
      {8, "quadrature convergence", 600, quadrature_study},
      {9, "negative controls", 60, [&] { return negative_controls(pipeline("flat_one_bump")); }},
      {10, "determinism", 600, determinism},
  };

  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o.ok = false;
      o.note(std::string("exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(dt < c.budget_s, "runtime budget");
    failures += !o.ok;
    ++ran;
    std::printf("criterion %2d %s  %-28s %7.1f s / %4.0f s  %s\n", c.id, o.ok ? "PASS" : "FAIL", c.title, dt,
                c.budget_s, o.detail.c_str());
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(scratch("").parent_path(), ec);
  std::printf("%d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
