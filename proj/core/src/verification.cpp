#include "conclab/verification.hpp"

#include "conclab/catalog.hpp"
#include "conclab/error.hpp"
#include "conclab/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace conclab::verification {

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Pass: return "pass";
    case Outcome::Fail: return "fail";
    case Outcome::NotApplicable: return "not_applicable";
  }
  return "not_applicable";
}

namespace {

Verdict make(const std::string& name, bool ok, std::vector<double> measured, double tol, std::string notes = {}) {
  return {name, ok ? Outcome::Pass : Outcome::Fail, std::move(measured), tol, std::move(notes)};
}

Verdict not_applicable(const std::string& name, std::string notes) {
  return {name, Outcome::NotApplicable, {}, 0.0, std::move(notes)};
}

std::vector<const profiles::Branch*> complete_branches(const DecompositionReport& r) {
  std::vector<const profiles::Branch*> out;
  for (const auto& b : r.branches)
    if (b.complete()) out.push_back(&b);
  return out;
}

}  // namespace

Verdict check_remainder_decay(const DecompositionReport& r, double tol_final, double min_decay_ratio) {
  if (r.remainder_curve.empty() || r.u_lp.empty()) return not_applicable("remainder_decay", "empty report");
  const double u1 = r.u_lp.front();
  const double first = r.remainder_curve.front(), last = r.remainder_curve.back();
  const double bound = tol_final * u1;
  const bool small = last < bound || last == 0.0;
  const bool settled = first < bound || first == 0.0;
  const double ratio = first > 0.0 ? last / first : 0.0;
  const bool decays = settled || ratio < min_decay_ratio;
  std::string notes = "final " + std::to_string(last) + " vs " + std::to_string(bound);
  if (!settled) notes += ", final/first " + std::to_string(ratio);
  return make("remainder_decay", small && decays, {last, u1 > 0.0 ? last / u1 : 0.0, ratio}, tol_final, notes);
}

Verdict check_separation(const DecompositionReport& r, double min_growth) {
  const auto& c = r.separation_curve;
  if (complete_branches(r).size() < 2 || c.empty()) return not_applicable("separation", "fewer than two branches");
  bool monotone = true;
  for (std::size_t s = 1; s < c.size(); ++s) monotone = monotone && c[s] > c[s - 1];
  const double growth = c.front() > 0.0 ? c.back() / c.front() : std::numeric_limits<double>::infinity();
  return make("separation", monotone && growth >= min_growth, {c.front(), c.back(), growth}, min_growth,
              monotone ? "" : "separation does not increase strictly along the schedule");
}

Verdict check_plancherel(const DecompositionReport& r, double tol_energy) {
  const auto& p = r.plancherel;
  const double floor = -tol_energy * p.rhs;
  return make("plancherel", p.slack >= floor, {p.lhs, p.rhs, p.slack}, tol_energy,
              "slack must be >= " + std::to_string(floor));
}

Verdict check_brezis_lieb(const DecompositionReport& r, double tol) {
  const double e = r.brezis_lieb.relative_error;
  const double lhs = r.brezis_lieb.lhs.empty() ? 0.0 : r.brezis_lieb.lhs.back();
  return make("brezis_lieb", e < tol, {lhs, r.brezis_lieb.rhs, e}, tol);
}

Verdict check_energy_monotonicity(const DecompositionReport& r, double tol) {
  const auto& e = r.energy_history;
  const double slack = tol * (r.u_lp.empty() ? 0.0 : r.u_lp.back());
  double worst = 0.0;
  for (std::size_t n = 1; n < e.size(); ++n) worst = std::max(worst, e[n] - e[n - 1]);
  return make("energy_monotonicity", worst <= slack, {worst}, tol);
}

Verdict check_global_profiles(const DecompositionReport& r, double tol_profile) {
  for (const auto& b : r.branches) {
    if (!b.complete()) return make("global_profile", false, {}, tol_profile, b.error);
  }
  if (r.branches.empty()) return not_applicable("global_profile", "no branches");
  double worst = 0.0;
  std::size_t undetermined = 0;
  for (const auto& b : r.branches) {
    worst = std::max(worst, b.profile.compat_residual / std::max(1.0, b.profile.scale));
    undetermined += b.profile.undetermined;
  }
  return make("global_profile", worst < tol_profile, {worst, static_cast<double>(undetermined)}, tol_profile,
              undetermined ? std::to_string(undetermined) + " local profiles undetermined, taken as zero" : "");
}

Verdict check_atlas_quality(const DecompositionReport& r, double tol_cocycle, double tol_metric) {
  double inv = 0.0, coc = 0.0, met = 0.0;
  bool any = false, converged = true;
  for (const auto& b : r.branches) {
    if (!b.atlas) continue;
    any = true;
    const auto& q = b.atlas->quality;
    inv = std::max(inv, q.inverse_residual);
    coc = std::max(coc, q.cocycle_residual);
    met = std::max(met, q.metric_residual);
    converged = converged && q.metrics_converged;
  }
  if (!any) return not_applicable("atlas_quality", "no atlas was built");
  const bool ok = inv < tol_cocycle && coc < tol_cocycle && met < tol_metric && converged;
  return make("atlas_quality", ok, {inv, coc, met}, tol_cocycle,
              converged ? "" : "a chart metric did not settle along the schedule");
}

Verdict check_atlas_flat_limit(const DecompositionReport& r, double tol, bool flat_at_infinity) {
  if (!flat_at_infinity) return not_applicable("atlas_flat_limit", "manifold is not flat at infinity");
  double dev = 0.0;
  bool any = false;
  for (const auto& b : r.branches) {
    if (!b.atlas) continue;
    any = true;
    dev = std::max(dev, b.atlas->quality.flat_deviation);
  }
  if (!any) return not_applicable("atlas_flat_limit", "no atlas was built");
  return make("atlas_flat_limit", dev < tol, {dev}, tol);
}

Verdict check_sequence_bounded(const DecompositionReport& r) {
  double peak = 0.0;
  for (double v : r.u_h12_square) peak = std::max(peak, std::sqrt(v));
  return make("sequence_bounded", r.h12_bound_violations == 0, {peak, static_cast<double>(r.h12_bound_violations)},
              1e-2);
}

bool SuiteResult::any_failed() const {
  return std::any_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.failed(); });
}

discretization::Region scenario_region(const config::ScenarioConfig& c, const spotlight::SequenceFamily& family) {
  const int n = c.dim;
  Vec lo(n), hi(n);
  if (c.region_explicit) {
    lo = c.region_lo;
    hi = c.region_hi;
  } else {
    lo.setConstant(std::numeric_limits<double>::infinity());
    hi.setConstant(-std::numeric_limits<double>::infinity());
    bool any = false;
    if (family.support_hint) {
      for (int k : c.k_schedule) {
        for (const auto& b : family.support_hint(k)) {
          any = true;
          for (int m = 0; m < n; ++m) {
            lo[m] = std::min(lo[m], b.center[m] - b.radius);
            hi[m] = std::max(hi[m], b.center[m] + b.radius);
          }
        }
      }
    }
    if (!any) {
      lo.setZero();
      hi.setZero();
    }
  }
  for (int m = 0; m < n; ++m) {
    lo[m] = std::floor((lo[m] - c.margin) / c.epsilon) * c.epsilon;
    hi[m] = std::ceil((hi[m] + c.margin) / c.epsilon) * c.epsilon;
  }
  return discretization::Region::box(lo, hi);
}

namespace {

struct Stage {
  SuiteResult& out;
  bool ok = true;

  template <class F>
  void run(const std::string& name, F&& f) {
    if (!ok) return;
    try {
      f();
    } catch (const Error& e) {
      out.errors.push_back({name, std::string(error_name(e.code())), e.what()});
      ok = false;
    } catch (const std::exception& e) {
      out.errors.push_back({name, "Exception", e.what()});
      ok = false;
    }
  }
};

}  // namespace

SuiteResult run_suite(const config::ScenarioConfig& c) {
  SuiteResult out;
  out.config = c;
  Stage stage{out};
  const int n = c.dim;
  std::mt19937_64 rng(c.seed);

  geometry::ManifoldSpec spec;
  spotlight::SequenceFamily family;
  discretization::Region region;
  discretization::Discretization disc;
  std::unique_ptr<profiles::PartitionOfUnity> pou;
  std::unique_ptr<spotlight::ChartSampler> sampler;
  std::unique_ptr<spotlight::TestBank> bank;

  auto uniform_points = [&](std::size_t count) {
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < count; ++i) {
      Vec x(n);
      for (int m = 0; m < n; ++m) {
        std::uniform_real_distribution<double> u(region.lo[m], region.hi[m]);
        x[m] = u(rng);
      }
      if (spec.contains(x)) pts.push_back(x);
    }
    return pts;
  };

  stage.run("geometry", [&] {
    spec = geometry::make_catalog(c.catalog_id, n, c.manifold_params);
    family = sequences::make_family(c.family_id, n, c.sequence_params);
    region = scenario_region(c, family);
    const auto pts = uniform_points(static_cast<std::size_t>(c.geometry_samples));
    out.curvature = geometry::validate_bounded_geometry(spec, pts);
  });
  stage.run("discretization", [&] {
    disc = discretization::build(spec, region, c.epsilon, c.rho);
    out.discretization = {disc.size(), region.lo, region.hi, disc.multiplicity};
  });
  stage.run("partition", [&] {
    pou = std::make_unique<profiles::PartitionOfUnity>(profiles::build_partition(spec, disc, c.rho));
    const auto pts = uniform_points(200);
    out.partition = profiles::check_partition(*pou, pts);
  });
  stage.run("decomposition", [&] {
    sampler = std::make_unique<spotlight::ChartSampler>(*pou, c.spacing);
    bank = std::make_unique<spotlight::TestBank>(sampler->lattice(), c.rho, c.p);
    profiles::DecompositionConfig dc;
    dc.k_schedule = c.k_schedule;
    dc.i_max = c.i_max;
    dc.n_max = c.n_max;
    dc.p = c.p;
    dc.tol_w = c.tol.tol_w;
    dc.tol_profile = c.tol.tol_profile;
    dc.tol_mass_factor = c.tol.tol_mass_factor;
    dc.atlas.gluing.tol_c2 = c.tol.tol_c2;
    dc.atlas.gluing.require_convergence = c.require_convergence;
    dc.atlas.tol_cocycle = c.tol.tol_cocycle;
    dc.atlas.tol_metric = c.tol.tol_metric;
    out.report = profiles::decompose(family, *sampler, *bank, dc);
  });
  const bool wants_spotlight = std::find(c.checks.begin(), c.checks.end(), "spotlight_consistency") != c.checks.end();
  if (wants_spotlight) {
    stage.run("spotlight", [&] {
      out.spotlight = spotlight::spotlight_test(family, *sampler, *bank, c.k_schedule, c.p, c.tol.spotlight_decay);
    });
  }

  const std::string failed_stage = out.errors.empty() ? "" : out.errors.front().stage;
  for (const auto& id : c.checks) {
    Verdict v;
    if (id == "bounded_geometry") {
      if (!out.curvature) {
        v = not_applicable(id, "stage " + failed_stage + " failed");
      } else {
        const auto& cr = *out.curvature;
        std::string notes;
        for (const auto& f : cr.flags) notes += (notes.empty() ? "" : "; ") + f;
        v = make(id, cr.declared_ok, {cr.max_riemann, cr.max_riemann_grad, cr.min_sectional, cr.max_sectional},
                 0.1, notes);
      }
    } else if (id == "partition_of_unity") {
      v = out.partition ? make(id, out.partition->max_sum_error < c.tol.tol_partition,
                               {out.partition->max_sum_error, out.partition->max_gradient}, c.tol.tol_partition)
                        : not_applicable(id, "stage " + failed_stage + " failed");
    } else if (id == "spotlight_consistency") {
      v = out.spotlight ? make(id, out.spotlight->consistent,
                               {out.spotlight->lp_norms.back(), out.spotlight->max_pairings.back(),
                                out.spotlight->bank_constant},
                               c.tol.spotlight_decay,
                               std::string("lp ") + (out.spotlight->lp_decays ? "decays" : "persists") + ", pairings " +
                                   (out.spotlight->pairings_small ? "decay" : "persist"))
                        : not_applicable(id, "stage " + failed_stage + " failed");
    } else if (!out.report) {
      v = not_applicable(id, "stage " + failed_stage + " failed");
    } else {
      const auto& r = *out.report;
      if (id == "sequence_bounded") v = check_sequence_bounded(r);
      else if (id == "atlas_quality") v = check_atlas_quality(r, c.tol.tol_cocycle, c.tol.tol_metric);
      else if (id == "atlas_flat_limit") v = check_atlas_flat_limit(r, c.tol.tol_flat_metric, geometry::flat_at_infinity(c.catalog_id));
      else if (id == "global_profile") v = check_global_profiles(r, c.tol.tol_profile);
      else if (id == "remainder_decay") v = check_remainder_decay(r, c.tol.tol_final, c.tol.min_decay_ratio);
      else if (id == "plancherel") v = check_plancherel(r, c.tol.tol_energy);
      else if (id == "brezis_lieb") v = check_brezis_lieb(r, c.tol.tol_brezis_lieb);
      else if (id == "separation") v = check_separation(r, c.tol.min_growth);
      else if (id == "energy_monotonicity") v = check_energy_monotonicity(r, c.tol.tol_energy_monotone);
    }
    out.verdicts.push_back(v);
  }
  return out;
}

nlohmann::json to_json(const Verdict& v) {
  nlohmann::json m = nlohmann::json::array();
  for (double x : v.measured) m.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
  return {{"name", v.name},
          {"status", to_string(v.outcome)},
          {"pass", v.outcome == Outcome::NotApplicable ? nlohmann::json(nullptr) : nlohmann::json(v.pass())},
          {"measured", m},
          {"tolerance", v.tolerance},
          {"notes", v.notes}};
}

nlohmann::json to_json(const std::vector<Verdict>& vs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& v : vs) a.push_back(to_json(v));
  return a;
}

}  // namespace conclab::verification
