#include "conclab/catalog.hpp"

#include "conclab/bump.hpp"
#include "conclab/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace conclab::geometry {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    fail(ErrorCode::ConstraintViolation, "dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
}

// Distance from c to the segment [a, b].
double segment_distance(const Vec& c, const Vec& a, const Vec& b) {
  const Vec d = b - a;
  const double dd = d.squaredNorm();
  double t = dd > 0.0 ? (c - a).dot(d) / dd : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * d - c).norm();
}

}  // namespace

ManifoldSpec make_flat(int dim, double declared_inj_radius) {
  check_dim(dim);
  ManifoldSpec s;
  s.dim = dim;
  s.catalog_id = "flat";
  s.inj_radius = declared_inj_radius;
  s.metric = [dim](const Vec&) -> Mat { return Mat::Identity(dim, dim); };
  s.metric_grad = [dim](const Vec&) {
    MetricGrad g;
    for (int m = 0; m < dim; ++m) g.d[m] = Mat::Zero(dim, dim);
    return g;
  };
  s.curvature_bounds = CurvatureBounds{0.0, 0.0};
  s.local_lower_bound = [](const Vec&, double) { return 1.0; };
  s.euclidean_segment = [](const Vec&, const Vec&) { return true; };
  return s;
}

ManifoldSpec make_hyperbolic(int dim, double declared_inj_radius) {
  check_dim(dim);
  if (dim < 2) fail(ErrorCode::ConstraintViolation, "hyperbolic space needs dim >= 2");
  ManifoldSpec s;
  s.dim = dim;
  s.catalog_id = "hyperbolic";
  s.inj_radius = declared_inj_radius;
  // Diagonal entries: g_00 = 1, g_mm = sinh^2(t) prod_{1 <= l < m} sin^2(theta_l).
  auto diag = [dim](const Vec& x) {
    Vec d(dim);
    d[0] = 1.0;
    double acc = std::sinh(x[0]) * std::sinh(x[0]);
    for (int m = 1; m < dim; ++m) {
      d[m] = acc;
      acc *= std::sin(x[m]) * std::sin(x[m]);
    }
    return d;
  };
  s.metric = [diag](const Vec& x) -> Mat { return diag(x).asDiagonal(); };
  s.metric_grad = [dim, diag](const Vec& x) {
    const Vec d = diag(x);
    MetricGrad g;
    for (int m = 0; m < dim; ++m) g.d[m] = Mat::Zero(dim, dim);
    const double coth = std::cosh(x[0]) / std::sinh(x[0]);
    for (int m = 1; m < dim; ++m) {
      g.d[0](m, m) = 2.0 * coth * d[m];
      for (int l = 1; l < m; ++l) g.d[l](m, m) = 2.0 * std::cos(x[l]) / std::sin(x[l]) * d[m];
    }
    return g;
  };
  s.in_domain = [dim](const Vec& x) {
    if (!(x[0] > 0.0)) return false;
    for (int l = 1; l + 1 < dim; ++l) {
      if (!(x[l] > 0.0 && x[l] < std::numbers::pi)) return false;
    }
    return true;
  };
  s.local_lower_bound = [dim](const Vec& x, double R) {
    const double t = x[0] - R;
    if (t <= 0.0) return 0.0;
    double lam = std::min(1.0, std::sinh(t) * std::sinh(t));
    for (int l = 1; l + 1 < dim; ++l) {
      const double lo = x[l] - R, hi = x[l] + R;
      if (lo <= 0.0 || hi >= std::numbers::pi) return 0.0;
      const double m = std::min(std::sin(lo), std::sin(hi));
      lam *= m * m;
    }
    return lam;
  };
  // Constant curvature -1: |Rm|^2 = 2 N (N - 1), nabla Rm = 0.
  s.curvature_bounds = CurvatureBounds{std::sqrt(2.0 * dim * (dim - 1)), 0.0};
  return s;
}

ManifoldSpec make_perturbed_flat(int dim, double beta, double radius, const Vec& center,
                                 double declared_inj_radius) {
  check_dim(dim);
  if (!(radius > 0.0)) fail(ErrorCode::ConstraintViolation, "perturbation radius must be positive");
  if (!(beta > -1.0)) fail(ErrorCode::ConstraintViolation, "perturbation amplitude must exceed -1");
  if (center.size() != dim) fail(ErrorCode::ConstraintViolation, "perturbation center has wrong dimension");
  ManifoldSpec s;
  s.dim = dim;
  s.catalog_id = "perturbed_flat";
  s.inj_radius = declared_inj_radius;
  s.metric = [=](const Vec& x) -> Mat {
    const double lam = 1.0 + beta * bump((x - center).norm() / radius);
    return lam * Mat::Identity(dim, dim);
  };
  s.metric_grad = [=](const Vec& x) {
    MetricGrad g;
    const Vec d = x - center;
    const double r = d.norm();
    const double db = r > 0.0 ? beta * bump_d1(r / radius) / (radius * r) : 0.0;
    for (int m = 0; m < dim; ++m) g.d[m] = (db * d[m]) * Mat::Identity(dim, dim);
    return g;
  };
  const double lower = std::min(1.0, 1.0 + beta);
  s.local_lower_bound = [=](const Vec& x, double R) {
    return (x - center).norm() - R >= radius ? 1.0 : lower;
  };
  s.euclidean_segment = [=](const Vec& a, const Vec& b) {
    return segment_distance(center, a, b) >= radius;
  };
  return s;
}

ManifoldSpec make_catalog(const std::string& id, int dim, const nlohmann::json& params) {
  auto num = [&](const char* key, double dflt) {
    return params.contains(key) ? params.at(key).get<double>() : dflt;
  };
  if (id == "flat") return make_flat(dim, num("inj_radius", 8.0));
  if (id == "hyperbolic") return make_hyperbolic(dim, num("inj_radius", 2.0));
  if (id == "perturbed_flat") {
    Vec c = Vec::Zero(dim);
    if (params.contains("center")) {
      const auto v = params.at("center").get<std::vector<double>>();
      if (static_cast<int>(v.size()) != dim) {
        fail(ErrorCode::ConstraintViolation, "perturbation center has wrong dimension");
      }
      for (int i = 0; i < dim; ++i) c[i] = v[static_cast<std::size_t>(i)];
    }
    return make_perturbed_flat(dim, num("beta", 0.2), num("radius", 2.0), c, num("inj_radius", 8.0));
  }
  fail(ErrorCode::ConstraintViolation, "unknown catalog_id '" + id + "'");
}

std::vector<std::string> catalog_ids() { return {"flat", "hyperbolic", "perturbed_flat"}; }

bool flat_at_infinity(const std::string& id) { return id == "flat" || id == "perturbed_flat"; }

}  // namespace conclab::geometry
