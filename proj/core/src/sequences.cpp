#include "conclab/sequences.hpp"

#include "conclab/bump.hpp"
#include "conclab/error.hpp"

#include <cmath>
#include <numbers>

namespace conclab::sequences {

using spotlight::SupportBall;

namespace {

double sphere_area(int dim) {
  // |S^{N-1}| = 2 pi^{N/2} / Gamma(N/2)
  return 2.0 * std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0);
}

template <class F>
double radial_integral(int dim, double radius, F f) {
  const int steps = 20000;
  const double dr = radius / steps;
  double s = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double r = (i + 0.5) * dr;
    s += f(r / radius) * std::pow(r, dim - 1);
  }
  return sphere_area(dim) * s * dr;
}

Vec vec_param(const nlohmann::json& params, const char* key, int dim, Vec dflt) {
  if (!params.contains(key)) return dflt;
  const auto v = params.at(key).get<std::vector<double>>();
  if (static_cast<int>(v.size()) != dim) {
    fail(ErrorCode::ConstraintViolation, std::string("sequence parameter '") + key + "' has wrong dimension");
  }
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out[i] = v[static_cast<std::size_t>(i)];
  return out;
}

double bump_h12(int dim, double radius, double amplitude) {
  return std::sqrt(bump_l2_square(dim, radius, amplitude) + bump_grad_square(dim, radius, amplitude));
}

}  // namespace

double bump_l2_square(int dim, double radius, double amplitude) {
  return amplitude * amplitude * radial_integral(dim, radius, [](double s) { return bump(s) * bump(s); });
}

double bump_grad_square(int dim, double radius, double amplitude) {
  return amplitude * amplitude / (radius * radius) *
         radial_integral(dim, radius, [](double s) { return bump_d1(s) * bump_d1(s); });
}

double bump_lp_power(int dim, double radius, double amplitude, double p) {
  return std::pow(std::abs(amplitude), p) *
         radial_integral(dim, radius, [p](double s) { return std::pow(bump(s), p); });
}

std::vector<std::string> family_ids() {
  return {"zero", "fixed_bump", "traveling_bump", "one_bump", "perturbed_escape", "two_bump",
          "flattening", "oscillating_sign", "decaying_bump", "oscillatory_energy"};
}

SequenceFamily make_family(const std::string& id, int dim, const nlohmann::json& params, double metric_factor) {
  auto num = [&](const char* key, double dflt) {
    return params.contains(key) ? params.at(key).get<double>() : dflt;
  };
  const double A = num("amplitude", 1.0);
  const double R = num("radius", 0.6);
  if (!(R > 0.0)) fail(ErrorCode::ConstraintViolation, "bump radius must be positive");
  const Vec zero = Vec::Zero(dim);
  Vec e1 = Vec::Zero(dim);
  e1[0] = 1.0;
  const Vec c0 = vec_param(params, "center", dim, zero);
  const double norm1 = bump_h12(dim, R, A);

  SequenceFamily f;
  f.id = id;
  if (id == "zero") {
    f.generator = [](int, const Vec&) { return 0.0; };
    f.support_hint = [](int) { return std::vector<SupportBall>{}; };
    f.h12_bound = 0.0;
    return f;
  }
  if (id == "fixed_bump" || id == "oscillating_sign" || id == "decaying_bump") {
    const int mode = id == "fixed_bump" ? 0 : id == "oscillating_sign" ? 1 : 2;
    f.generator = [=](int k, const Vec& x) {
      const double b = A * bump((x - c0).norm() / R);
      if (mode == 1) return (k % 2 == 0 ? 1.0 : -1.0) * b;
      if (mode == 2) return b / k;
      return b;
    };
    f.support_hint = [=](int) { return std::vector<SupportBall>{{c0, R}}; };
    f.h12_bound = norm1 * metric_factor;
    return f;
  }
  if (id == "traveling_bump" || id == "one_bump" || id == "perturbed_escape") {
    const Vec v = vec_param(params, "velocity", dim, e1);
    f.generator = [=](int k, const Vec& x) { return A * bump((x - c0 - k * v).norm() / R); };
    f.support_hint = [=](int k) { return std::vector<SupportBall>{{c0 + k * v, R}}; };
    f.h12_bound = norm1 * metric_factor;
    return f;
  }
  if (id == "two_bump") {
    const Vec v = vec_param(params, "velocity", dim, e1);
    const Vec c1 = vec_param(params, "second_center", dim, zero);
    const Vec v1 = vec_param(params, "second_velocity", dim, -e1);
    const double A1 = num("second_amplitude", A);
    const double R1 = num("second_radius", R);
    f.generator = [=](int k, const Vec& x) {
      return A * bump((x - c0 - k * v).norm() / R) + A1 * bump((x - c1 - k * v1).norm() / R1);
    };
    f.support_hint = [=](int k) {
      return std::vector<SupportBall>{{c0 + k * v, R}, {c1 + k * v1, R1}};
    };
    const double n2 = bump_h12(dim, R1, A1);
    f.h12_bound = std::sqrt(norm1 * norm1 + n2 * n2) * metric_factor;
    return f;
  }
  if (id == "flattening") {
    const double growth = num("growth", 0.25);
    auto sk = [growth](int k) { return 1.0 + (k - 1) * growth; };
    f.generator = [=](int k, const Vec& x) {
      const double s = sk(k);
      return A * std::pow(s, -dim / 2.0) * bump((x - c0).norm() / (s * R));
    };
    f.support_hint = [=](int k) { return std::vector<SupportBall>{{c0, sk(k) * R}}; };
    // The L^2 part is scale invariant and the gradient part decreases in s.
    f.h12_bound = norm1 * metric_factor;
    return f;
  }
  if (id == "oscillatory_energy") {
    const Vec v = vec_param(params, "velocity", dim, e1);
    const Vec co = vec_param(params, "oscillation_center", dim, zero);
    const double omega0 = num("omega0", 4.0);
    const double Ao = num("oscillation_amplitude", A);
    f.generator = [=](int k, const Vec& x) {
      const double w = omega0 * std::sqrt(static_cast<double>(k));
      return A * bump((x - c0 - k * v).norm() / R) + Ao * std::sin(w * x[0]) / w * bump((x - co).norm() / R);
    };
    f.support_hint = [=](int k) { return std::vector<SupportBall>{{c0 + k * v, R}, {co, R}}; };
    // |d(sin(w x) b / w)| <= |b| + |db| / w.
    const double osc = std::sqrt(bump_l2_square(dim, R, Ao)) / omega0 +
                       std::sqrt(bump_l2_square(dim, R, Ao)) + std::sqrt(bump_grad_square(dim, R, Ao)) / omega0;
    f.h12_bound = (norm1 + osc) * metric_factor;
    return f;
  }
  fail(ErrorCode::ConstraintViolation, "unknown family_id '" + id + "'");
}

}  // namespace conclab::sequences
