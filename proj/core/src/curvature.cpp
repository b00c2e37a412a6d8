#include "conclab/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conclab::geometry {

namespace {

using Gamma = std::array<Mat, kMaxDim>;

std::size_t idx4(int n, int i, int j, int k, int l) {
  return static_cast<std::size_t>(((i * n + j) * n + k) * n + l);
}

// Christoffel symbols and their coordinate derivatives dgamma[m][k](i, j).
void gamma_with_derivatives(const ManifoldSpec& spec, const Vec& x, Gamma& gamma,
                            std::array<Gamma, kMaxDim>& dgamma) {
  const double h = spec.numerics.h_curvature;
  gamma = christoffel(spec, x);
  for (int m = 0; m < spec.dim; ++m) {
    Vec xp = x, xm = x;
    xp[m] += h;
    xm[m] -= h;
    const Gamma gp = christoffel(spec, xp);
    const Gamma gm = christoffel(spec, xm);
    for (int k = 0; k < spec.dim; ++k) dgamma[m][k] = (gp[k] - gm[k]) / (2.0 * h);
  }
}

std::vector<double> riemann_from(const ManifoldSpec& spec, const Mat& g, const Gamma& G,
                                 const std::array<Gamma, kMaxDim>& dG) {
  const int n = spec.dim;
  // Rup(l; i, j, k) = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
  std::vector<double> rup(static_cast<std::size_t>(n * n * n * n), 0.0);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = dG[i][l](j, k) - dG[j][l](i, k);
          for (int m = 0; m < n; ++m) s += G[l](i, m) * G[m](j, k) - G[l](j, m) * G[m](i, k);
          rup[idx4(n, l, i, j, k)] = s;
        }
  std::vector<double> r(rup.size(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) s += g(l, m) * rup[idx4(n, m, i, j, k)];
          r[idx4(n, i, j, k, l)] = s;
        }
  return r;
}

// <t, u> with every index contracted through g^{-1}.
double tensor_inner4(int n, const std::vector<double>& t, const std::vector<double>& u, const Mat& ginv) {
  const std::size_t sz = t.size();
  std::vector<double> a(t), b(sz);
  for (int slot = 0; slot < 4; ++slot) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            int idx[4] = {i, j, k, l};
            double s = 0.0;
            for (int m = 0; m < n; ++m) {
              int jdx[4] = {i, j, k, l};
              jdx[slot] = m;
              s += ginv(idx[slot], m) * a[idx4(n, jdx[0], jdx[1], jdx[2], jdx[3])];
            }
            b[idx4(n, i, j, k, l)] = s;
          }
    std::swap(a, b);
  }
  double s = 0.0;
  for (std::size_t q = 0; q < sz; ++q) s += a[q] * u[q];
  return s;
}

double tensor_norm4(int n, const std::vector<double>& t, const Mat& ginv) {
  return std::sqrt(std::max(0.0, tensor_inner4(n, t, t, ginv)));
}

}  // namespace

std::vector<double> riemann_lower(const ManifoldSpec& spec, const Vec& x) {
  Gamma G;
  std::array<Gamma, kMaxDim> dG;
  gamma_with_derivatives(spec, x, G, dG);
  return riemann_from(spec, metric_at(spec, x), G, dG);
}

double sectional_curvature(const ManifoldSpec& spec, const Vec& x, int a, int b) {
  const int n = spec.dim;
  const Mat g = metric_at(spec, x);
  const auto r = riemann_lower(spec, x);
  const double num = r[idx4(n, a, b, b, a)];
  const double den = g(a, a) * g(b, b) - g(a, b) * g(a, b);
  return num / den;
}

CurvatureReport validate_bounded_geometry(const ManifoldSpec& spec, std::span<const Vec> samples) {
  const int n = spec.dim;
  const double h = spec.numerics.h_curvature;
  CurvatureReport rep;
  rep.min_sectional = std::numeric_limits<double>::infinity();
  rep.max_sectional = -std::numeric_limits<double>::infinity();
  for (const Vec& x : samples) {
    const Mat g = metric_at(spec, x);
    const Mat ginv = g.inverse();
    Gamma G;
    std::array<Gamma, kMaxDim> dG;
    gamma_with_derivatives(spec, x, G, dG);
    const auto R = riemann_from(spec, g, G, dG);
    rep.max_riemann = std::max(rep.max_riemann, tensor_norm4(n, R, ginv));

    const Frame f = make_frame(spec, x);
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        const Vec ea = f.basis.col(a), eb = f.basis.col(b);
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
              for (int l = 0; l < n; ++l) s += R[idx4(n, i, j, k, l)] * ea[i] * eb[j] * eb[k] * ea[l];
        rep.min_sectional = std::min(rep.min_sectional, s);
        rep.max_sectional = std::max(rep.max_sectional, s);
      }

    // nabla_m R_ijkl = d_m R_ijkl - sum over slots of Gamma^p_{m slot} R_{..p..}
    std::vector<std::vector<double>> nabla(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
      Vec xp = x, xm = x;
      xp[m] += h;
      xm[m] -= h;
      const auto Rp = riemann_lower(spec, xp);
      const auto Rm = riemann_lower(spec, xm);
      std::vector<double> nab(R.size());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              const std::size_t q = idx4(n, i, j, k, l);
              double s = (Rp[q] - Rm[q]) / (2.0 * h);
              for (int p = 0; p < n; ++p) {
                s -= G[p](m, i) * R[idx4(n, p, j, k, l)];
                s -= G[p](m, j) * R[idx4(n, i, p, k, l)];
                s -= G[p](m, k) * R[idx4(n, i, j, p, l)];
                s -= G[p](m, l) * R[idx4(n, i, j, k, p)];
              }
              nab[q] = s;
            }
      nabla[static_cast<std::size_t>(m)] = std::move(nab);
    }
    double grad_sq = 0.0;
    for (int m = 0; m < n; ++m)
      for (int mm = 0; mm < n; ++mm) {
        if (ginv(m, mm) == 0.0) continue;
        grad_sq += ginv(m, mm) * tensor_inner4(n, nabla[static_cast<std::size_t>(m)],
                                               nabla[static_cast<std::size_t>(mm)], ginv);
      }
    rep.max_riemann_grad = std::max(rep.max_riemann_grad, std::sqrt(std::max(0.0, grad_sq)));
    ++rep.samples;
  }
  if (rep.samples == 0) {
    rep.min_sectional = rep.max_sectional = 0.0;
  }
  if (spec.curvature_bounds) {
    const auto& cb = *spec.curvature_bounds;
    if (rep.max_riemann > 1.1 * cb.riemann + 1e-8) {
      rep.declared_ok = false;
      rep.flags.push_back("declared |Rm| bound exceeded by more than 10%");
    }
    if (rep.max_riemann_grad > 1.1 * cb.riemann_grad + 1e-6) {
      rep.declared_ok = false;
      rep.flags.push_back("declared |nabla Rm| bound exceeded by more than 10%");
    }
  }
  return rep;
}

}  // namespace conclab::geometry
