#include "conclab/profiles.hpp"

#include "conclab/error.hpp"
#include "conclab/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace conclab::profiles {

using spotlight::ChartData;
using spotlight::MetricView;
using spotlight::SupportBall;

std::size_t ProfileArray::count(LimitStatus s) const {
  return static_cast<std::size_t>(std::count(statuses.begin(), statuses.end(), s));
}

ProfileArray extract_local_profiles(const ChartSource& source, const ChartSampler& sampler,
                                    const TrailingSystem& trailing, const TestBank& bank, double tol_w) {
  const std::size_t S = trailing.k_schedule.size();
  ProfileArray pa;
  for (int i = 0; i <= trailing.i_max; ++i) {
    std::vector<GridFunction> seq;
    std::vector<MetricView> metrics;
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t y = trailing.order[s][static_cast<std::size_t>(i)];
      seq.push_back({sampler.lattice(), source(s, y)});
      metrics.push_back(MetricView::of(sampler.chart(y)));
    }
    auto wl = spotlight::weak_limit(seq, metrics, bank, tol_w);
    pa.statuses.push_back(wl.status);
    pa.scales.push_back(wl.scale);
    pa.entries.push_back(wl.status == LimitStatus::Converged ? std::move(wl.limit)
                                                              : GridFunction::zeros(sampler.lattice()));
  }
  return pa;
}

ProfileArray extract_local_profiles(const SequenceFamily& family, const ChartSampler& sampler,
                                    const TrailingSystem& trailing, const TestBank& bank, double tol_w) {
  const auto source = [&](std::size_t s, std::size_t y) {
    const int k = trailing.k_schedule[s];
    return sampler.sample(y, [&family, k](const Vec& x) { return family.generator(k, x); });
  };
  return extract_local_profiles(source, sampler, trailing, bank, tol_w);
}

double chart_value(const GridFunction& f, const Vec& xi) {
  const Lattice& lat = f.lattice;
  const int n = lat.dim();
  const double h = lat.spacing();
  const int half = lat.half();
  LatticeCoord base{};
  std::array<double, kMaxDim> frac{};
  for (int m = 0; m < n; ++m) {
    const double u = xi[m] / h;
    const double fl = std::floor(u);
    base[static_cast<std::size_t>(m)] = static_cast<int>(fl);
    frac[static_cast<std::size_t>(m)] = u - fl;
  }
  double acc = 0.0, wsum = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    LatticeCoord z = base;
    double w = 1.0;
    for (int m = 0; m < n; ++m) {
      const bool up = (corner >> m) & 1;
      z[static_cast<std::size_t>(m)] += up ? 1 : 0;
      w *= up ? frac[static_cast<std::size_t>(m)] : 1.0 - frac[static_cast<std::size_t>(m)];
    }
    if (w == 0.0) continue;
    bool in_box = true;
    for (int m = 0; m < n; ++m) in_box = in_box && std::abs(z[static_cast<std::size_t>(m)]) <= half;
    if (!in_box) continue;
    const auto idx = lat.index_of(z);
    if (!idx || !lat.inside(*idx)) continue;
    const double v = f.values[*idx];
    if (std::isnan(v)) continue;
    acc += w * v;
    wsum += w;
  }
  return wsum > 0.0 ? acc / wsum : 0.0;
}

double compat_residual(const std::vector<GridFunction>& w, const atlas::InfinityAtlas& at) {
  if (w.size() != static_cast<std::size_t>(at.i_max) + 1) {
    fail(ErrorCode::IncompatibleProfile, "profile chart count differs from the atlas");
  }
  const Lattice& cl = at.chart_lattice;
  const double lim = at.rho - at.spacing;
  double r = 0.0;
  for (const auto& [key, psi] : at.gluing.psi) {
    const auto [i, j] = key;
    const auto& wi = w[static_cast<std::size_t>(i)];
    const auto& wj = w[static_cast<std::size_t>(j)];
    for (std::size_t idx : cl.active()) {
      const std::size_t m = at.chart_to_map[idx];
      if (!psi.defined[m]) continue;
      const Vec v = psi.at(m);
      if (!(v.norm() < lim)) continue;
      r = std::max(r, std::abs(wj.values[idx] - chart_value(wi, v)));
    }
  }
  return r;
}

GlobalProfile assemble_global(const ProfileArray& pa, const atlas::InfinityAtlas& at, double tol_profile) {
  GlobalProfile gp;
  for (std::size_t i = 0; i < pa.entries.size(); ++i) {
    if (pa.statuses[i] == LimitStatus::Undetermined) {
      ++gp.undetermined;
      gp.chart_values.push_back(GridFunction::zeros(at.chart_lattice));
    } else {
      gp.chart_values.push_back(pa.entries[i]);
    }
    for (std::size_t idx : at.chart_lattice.active()) {
      gp.scale = std::max(gp.scale, std::abs(gp.chart_values.back().values[idx]));
    }
  }
  for (const auto& f : gp.chart_values) {
    if (!f.lattice.same_as(at.chart_lattice)) fail(ErrorCode::IncompatibleProfile, "profile lattice differs from the atlas");
  }
  gp.compat_residual = compat_residual(gp.chart_values, at);
  if (!(gp.compat_residual < tol_profile * std::max(1.0, gp.scale))) {
    fail(ErrorCode::IncompatibleProfiles,
         "local profiles disagree on chart overlaps (residual " + std::to_string(gp.compat_residual) + ")");
  }
  return gp;
}

ScalarFn elementary_concentration(const GlobalProfile& gp, const TrailingSystem& trailing,
                                  const PartitionOfUnity& pou, std::size_t slot) {
  if (slot >= trailing.order.size()) fail(ErrorCode::InvalidArgument, "schedule slot out of range");
  std::map<std::size_t, std::size_t> index;
  for (int i = 0; i <= trailing.i_max; ++i) {
    index.emplace(trailing.order[slot][static_cast<std::size_t>(i)], static_cast<std::size_t>(i));
  }
  return [values = gp.chart_values, index = std::move(index), &pou](const Vec& x) {
    std::vector<ChartWeight> ws;
    try {
      ws = pou.evaluate(x);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CoveringGap) return 0.0;
      throw;
    }
    double s = 0.0;
    for (const auto& w : ws) {
      const auto it = index.find(w.center);
      if (it == index.end()) continue;
      s += w.value * chart_value(values[it->second], w.coords);
    }
    return s;
  };
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BranchEval {
  std::vector<std::vector<int>> index;  // [slot][center] -> i or -1
  std::vector<GridFunction> values;
  std::vector<char> nonzero;
  std::vector<std::vector<std::size_t>> charts;  // charts where W_k may be nonzero, per slot
};

bool is_zero(const GridFunction& f) {
  for (std::size_t idx : f.lattice.active())
    if (f.values[idx] != 0.0) return false;
  return true;
}

// u_k - w0 - sum_n W_k^(n) sampled on chart lattices through the cached
// neighbor lists of each chart.
class ResidualModel {
 public:
  ResidualModel(const SequenceFamily& family, const ChartSampler& sampler, const std::vector<int>& schedule)
      : family_(family), sampler_(sampler), schedule_(schedule) {
    const std::size_t S = schedule.size();
    base_.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
      if (family.support_hint) {
        base_[s] = sampler.charts_meeting(family.support_hint(schedule[s]));
      } else {
        base_[s].resize(sampler.disc().size());
        for (std::size_t y = 0; y < base_[s].size(); ++y) base_[s][y] = y;
      }
    }
  }

  const std::vector<std::size_t>& base(std::size_t s) const { return base_[s]; }

  void set_w0(const std::map<std::size_t, GridFunction>* w0) {
    w0_ = w0;
    memo_.clear();
  }

  void add_branch(const TrailingSystem& tr, const GlobalProfile& gp) {
    const auto& spec = sampler_.spec();
    const auto& disc = sampler_.disc();
    const double rho = sampler_.partition().rho();
    BranchEval b;
    b.values = gp.chart_values;
    for (const auto& f : b.values) b.nonzero.push_back(!is_zero(f));
    for (std::size_t s = 0; s < schedule_.size(); ++s) {
      std::vector<int> idx(disc.size(), -1);
      std::vector<SupportBall> balls;
      for (int i = 0; i <= tr.i_max; ++i) {
        const std::size_t y = tr.order[s][static_cast<std::size_t>(i)];
        idx[y] = i;
        if (b.nonzero[static_cast<std::size_t>(i)]) {
          balls.push_back({disc.points[y], geometry::coordinate_radius_bound(spec, disc.points[y], rho)});
        }
      }
      b.index.push_back(std::move(idx));
      b.charts.push_back(balls.empty() ? std::vector<std::size_t>{} : sampler_.charts_meeting(balls));
    }
    branches_.push_back(std::move(b));
    memo_.clear();
  }

  // Charts whose balls may carry residual mass at slot s.
  std::vector<std::size_t> charts(std::size_t s) const {
    std::vector<std::size_t> out = base_[s];
    if (w0_) {
      for (const auto& kv : *w0_) out.push_back(kv.first);
    }
    for (const auto& b : branches_) out.insert(out.end(), b.charts[s].begin(), b.charts[s].end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  const std::vector<double>& residual(std::size_t s, std::size_t y) {
    const auto key = std::make_pair(s, y);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const int k = schedule_[s];
    const auto& fam = family_;
    std::vector<double> f = sampler_.sample(y, [&fam, k](const Vec& x) { return fam.generator(k, x); });
    const ChartData& c = sampler_.chart(y);
    const int n = sampler_.lattice().dim();
    Vec xi(n);
    if ((w0_ && !w0_->empty()) || !branches_.empty()) {
      for (std::size_t idx : sampler_.lattice().active()) {
        double sub = 0.0;
        for (std::uint32_t q = c.offsets[idx]; q < c.offsets[idx + 1]; ++q) {
          const auto& nb = c.neighbors[q];
          bool loaded = false;
          auto load = [&] {
            if (loaded) return;
            for (int m = 0; m < n; ++m) xi[m] = nb.coords[static_cast<std::size_t>(m)];
            loaded = true;
          };
          if (w0_) {
            const auto w = w0_->find(nb.center);
            if (w != w0_->end()) {
              load();
              sub += nb.weight * chart_value(w->second, xi);
            }
          }
          for (const auto& b : branches_) {
            const int i = b.index[s][nb.center];
            if (i < 0 || !b.nonzero[static_cast<std::size_t>(i)]) continue;
            load();
            sub += nb.weight * chart_value(b.values[static_cast<std::size_t>(i)], xi);
          }
        }
        f[idx] -= sub;
      }
    }
    return memo_.emplace(key, std::move(f)).first->second;
  }

  double local_mass(std::size_t s, std::size_t y, double p) {
    const auto& r = residual(s, y);
    const ChartData& c = sampler_.chart(y);
    double acc = 0.0;
    for (std::size_t idx : sampler_.lattice().active()) acc += std::pow(std::abs(r[idx]), p) * c.volume[idx];
    return acc * std::pow(sampler_.spacing(), sampler_.lattice().dim());
  }

  double lp_power(std::size_t s, double p) {
    double acc = 0.0;
    for (std::size_t y : charts(s)) acc += spotlight::chart_lp_power(sampler_, y, residual(s, y), p);
    return acc;
  }

 private:
  const SequenceFamily& family_;
  const ChartSampler& sampler_;
  std::vector<int> schedule_;
  std::vector<std::vector<std::size_t>> base_;
  const std::map<std::size_t, GridFunction>* w0_ = nullptr;
  std::vector<BranchEval> branches_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> memo_;
};

}  // namespace

PlancherelCheck check_plancherel(const DecompositionReport& r) {
  PlancherelCheck c;
  c.lhs = r.w0_h12_square;
  for (const auto& b : r.branches)
    if (b.complete()) c.lhs += b.norms.h12_square;
  const std::size_t S = r.u_h12_square.size();
  for (std::size_t s = S >= 3 ? S - 3 : 0; s < S; ++s) c.rhs = std::max(c.rhs, r.u_h12_square[s]);
  c.slack = c.rhs - c.lhs;
  return c;
}

double check_brezis_lieb(const DecompositionReport& r) {
  if (r.u_lp.empty()) return 0.0;
  const double lhs = std::pow(r.u_lp.back(), r.p);
  double rhs = r.w0_lp_power;
  for (const auto& b : r.branches)
    if (b.complete()) rhs += b.norms.lp_power;
  if (lhs == 0.0 && rhs == 0.0) return 0.0;
  return std::abs(lhs - rhs) / std::max(lhs, std::numeric_limits<double>::min());
}

DecompositionReport decompose(const SequenceFamily& family, const ChartSampler& sampler, const TestBank& bank,
                              const DecompositionConfig& cfg) {
  const auto& spec = sampler.spec();
  const auto& disc = sampler.disc();
  const std::size_t S = cfg.k_schedule.size();
  if (S < 4) fail(ErrorCode::InvalidArgument, "the schedule needs at least 4 entries");
  spotlight::check_exponent(cfg.p, spec.dim);
  const double p = cfg.p;

  DecompositionReport rep;
  rep.k_schedule = cfg.k_schedule;
  rep.p = p;

  ResidualModel model(family, sampler, cfg.k_schedule);
  for (std::size_t s = 0; s < S; ++s) {
    const int k = cfg.k_schedule[s];
    const ScalarFn u = [&family, k](const Vec& x) { return family.generator(k, x); };
    double lp = 0.0, h12 = 0.0;
    for (std::size_t y : model.base(s)) {
      const auto f = sampler.sample(y, u);
      lp += spotlight::chart_lp_power(sampler, y, f, p);
      h12 += spotlight::chart_h12_square(sampler, y, f);
    }
    rep.u_lp.push_back(std::pow(lp, 1.0 / p));
    rep.u_h12_square.push_back(h12);
    if (family.h12_bound > 0.0 && std::sqrt(h12) > family.h12_bound * (1.0 + 1e-2)) ++rep.h12_bound_violations;
  }
  rep.tol_mass = cfg.tol_mass_factor * std::pow(rep.u_lp.front(), p);

  // Weak limit on M from stationary charts covering the tail supports.
  std::set<std::size_t> w0_charts;
  for (std::size_t s = S - 3; s < S; ++s) w0_charts.insert(model.base(s).begin(), model.base(s).end());
  for (std::size_t y : w0_charts) {
    std::vector<GridFunction> seq;
    std::vector<MetricView> metrics;
    for (std::size_t s = 0; s < S; ++s) {
      seq.push_back({sampler.lattice(), model.residual(s, y)});
      metrics.push_back(MetricView::of(sampler.chart(y)));
    }
    auto wl = spotlight::weak_limit(seq, metrics, bank, cfg.tol_w);
    switch (wl.status) {
      case LimitStatus::Converged:
        ++rep.w0_converged;
        if (!is_zero(wl.limit)) rep.w0.emplace(y, std::move(wl.limit));
        break;
      case LimitStatus::Zero: ++rep.w0_zero; break;
      case LimitStatus::Undetermined: ++rep.w0_undetermined; break;
    }
  }
  for (const auto& [y, f] : rep.w0) {
    rep.w0_h12_square += spotlight::chart_h12_square(sampler, y, f.values);
    rep.w0_lp_power += spotlight::chart_lp_power(sampler, y, f.values, p);
  }
  model.set_w0(&rep.w0);
  rep.energy_history.push_back(std::pow(model.lp_power(S - 1, p), 1.0 / p));

  auto select = [&](std::vector<std::size_t>& ids, std::vector<double>& masses) {
    for (std::size_t s = 0; s < S; ++s) {
      const auto charts = model.charts(s);
      std::vector<double> m;
      double best = 0.0;
      for (std::size_t y : charts) {
        m.push_back(model.local_mass(s, y, p));
        best = std::max(best, m.back());
      }
      std::size_t pick = charts.empty() ? 0 : charts.front();
      for (std::size_t q = 0; q < charts.size(); ++q) {
        if (m[q] >= best * (1.0 - cfg.tie_tolerance)) {
          pick = charts[q];
          break;
        }
      }
      ids.push_back(pick);
      masses.push_back(best);
    }
  };

  bool stopped = false;
  for (int n = 1; n <= cfg.n_max; ++n) {
    Branch b;
    select(b.center_ids, b.captured_mass);
    if (b.captured_mass.back() < rep.tol_mass || b.captured_mass.back() == 0.0) {
      rep.stop_reason = "residual mass below tol_mass";
      stopped = true;
      break;
    }
    try {
      b.trailing = discretization::trailing_system(spec, disc, b.center_ids, cfg.k_schedule, cfg.i_max);
      b.atlas = std::make_shared<atlas::InfinityAtlas>(atlas::build_atlas(sampler, b.trailing, cfg.atlas));
      const ChartSource source = [&model](std::size_t s, std::size_t y) { return model.residual(s, y); };
      b.local = extract_local_profiles(source, sampler, b.trailing, bank, cfg.tol_w);
      b.profile = assemble_global(b.local, *b.atlas, cfg.tol_profile);
      b.norms = atlas::norms_on_infinity(*b.atlas, b.profile.chart_values, p);
    } catch (const Error& e) {
      b.error = e.what();
      rep.branches.push_back(std::move(b));
      rep.stop_reason = "branch " + std::to_string(n) + " failed";
      stopped = true;
      break;
    }
    bool captured = false;
    for (const auto& f : b.profile.chart_values) captured = captured || !is_zero(f);
    if (!captured) {
      rep.stop_reason = "selected centers carry no convergent profile";
      stopped = true;
      break;
    }
    model.add_branch(b.trailing, b.profile);
    rep.branches.push_back(std::move(b));
    rep.energy_history.push_back(std::pow(model.lp_power(S - 1, p), 1.0 / p));
  }
  if (!stopped) {
    std::vector<std::size_t> ids;
    std::vector<double> masses;
    select(ids, masses);
    if (masses.back() >= rep.tol_mass && masses.back() > 0.0) {
      rep.branch_limit_reached = true;
      rep.stop_reason = "branch limit reached";
    } else {
      rep.stop_reason = "residual mass below tol_mass";
    }
  }

  for (std::size_t s = 0; s < S; ++s) rep.remainder_curve.push_back(std::pow(model.lp_power(s, p), 1.0 / p));

  std::vector<const Branch*> done;
  for (const auto& b : rep.branches)
    if (b.complete()) done.push_back(&b);
  if (done.size() >= 2) {
    for (std::size_t s = 0; s < S; ++s) {
      double best = kInf;
      for (std::size_t a = 0; a < done.size(); ++a)
        for (std::size_t c = a + 1; c < done.size(); ++c) {
          best = std::min(best, geometry::geodesic_distance(spec, disc.points[done[a]->center_ids[s]],
                                                            disc.points[done[c]->center_ids[s]], disc.points));
        }
      rep.separation_curve.push_back(best);
    }
  }

  rep.plancherel = check_plancherel(rep);
  for (double v : rep.u_lp) rep.brezis_lieb.lhs.push_back(std::pow(v, p));
  rep.brezis_lieb.rhs = rep.w0_lp_power;
  for (const auto* b : done) rep.brezis_lieb.rhs += b->norms.lp_power;
  rep.brezis_lieb.relative_error = check_brezis_lieb(rep);
  return rep;
}

namespace {

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

nlohmann::json nums(const std::vector<double>& xs) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

std::string payload(const GridFunction& f, const std::filesystem::path& dir) {
  const std::string h = content_hash(f);
  if (!dir.empty()) write_binary(f, dir / (h + ".bin"));
  return h;
}

}  // namespace

nlohmann::json to_json(const DecompositionReport& r, const std::filesystem::path& dir, bool transitions) {
  nlohmann::json j;
  j["k_schedule"] = r.k_schedule;
  j["p"] = r.p;
  j["tol_mass"] = r.tol_mass;
  nlohmann::json w0 = nlohmann::json::array();
  for (const auto& [y, f] : r.w0) w0.push_back({{"chart", y}, {"ref", payload(f, dir)}});
  j["w0"] = {{"charts", w0},
             {"converged", r.w0_converged},
             {"zero", r.w0_zero},
             {"undetermined", r.w0_undetermined},
             {"h12_square", r.w0_h12_square},
             {"lp_power", r.w0_lp_power}};
  nlohmann::json branches = nlohmann::json::array();
  for (const auto& b : r.branches) {
    nlohmann::json jb;
    jb["centers"] = b.center_ids;
    jb["captured_mass"] = nums(b.captured_mass);
    jb["error"] = b.error;
    if (b.complete()) {
      jb["trailing_order"] = b.trailing.order;
      jb["atlas"] = atlas::to_json(*b.atlas, dir, transitions);
      nlohmann::json st = nlohmann::json::array();
      for (auto s : b.local.statuses) st.push_back(spotlight::to_string(s));
      jb["local_statuses"] = st;
      nlohmann::json refs = nlohmann::json::array();
      for (const auto& f : b.profile.chart_values) refs.push_back(payload(f, dir));
      jb["profile"] = {{"refs", refs},
                       {"compat_residual", b.profile.compat_residual},
                       {"scale", b.profile.scale},
                       {"undetermined", b.profile.undetermined}};
      jb["norms"] = {{"h12", b.norms.h12}, {"lp", b.norms.lp}, {"h12_square", b.norms.h12_square},
                     {"lp_power", b.norms.lp_power}};
    } else if (b.atlas) {
      jb["atlas"] = atlas::to_json(*b.atlas, dir, transitions);
    }
    branches.push_back(jb);
  }
  j["branches"] = branches;
  j["u_lp"] = nums(r.u_lp);
  j["u_h12_square"] = nums(r.u_h12_square);
  j["remainder_curve"] = nums(r.remainder_curve);
  j["separation_curve"] = nums(r.separation_curve);
  j["energy_history"] = nums(r.energy_history);
  j["plancherel"] = {{"lhs", r.plancherel.lhs}, {"rhs", r.plancherel.rhs}, {"slack", r.plancherel.slack}};
  j["brezis_lieb"] = {{"lhs", nums(r.brezis_lieb.lhs)},
                      {"rhs", r.brezis_lieb.rhs},
                      {"relative_error", r.brezis_lieb.relative_error}};
  j["branch_limit_reached"] = r.branch_limit_reached;
  j["h12_bound_violations"] = r.h12_bound_violations;
  j["stop_reason"] = r.stop_reason;
  return j;
}

}  // namespace conclab::profiles
