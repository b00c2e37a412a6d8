#pragma once

#include "conclab/lattice.hpp"
#include "conclab/partition.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace conclab::spotlight {

using ScalarFn = std::function<double(const Vec&)>;
using discretization::Discretization;
using geometry::ManifoldSpec;
using profiles::PartitionOfUnity;

// p in [2, 2*), with 2* = 2N / (N - 2) for N >= 3 and 2* = infinity otherwise.
void check_exponent(double p, int dim);
double default_exponent(int dim);

// Coordinate ball that contains the support of a sequence element.
struct SupportBall {
  Vec center;
  double radius = 0.0;
};

struct SequenceFamily {
  std::string id;
  std::function<double(int, const Vec&)> generator;
  std::function<std::vector<SupportBall>(int)> support_hint;  // optional
  double h12_bound = 0.0;
};

// Per-chart cache: lattice points of Omega_rho mapped through e_y, the
// pullback metric, and the partition weights of every chart ball meeting each
// point together with the corresponding normal coordinates.
struct ChartNeighbor {
  std::uint32_t center = 0;
  double weight = 0.0;
  std::array<double, kMaxDim> coords{};
};

struct ChartData {
  std::size_t center = 0;
  std::vector<double> points;      // size * N, NaN outside the mask
  std::vector<double> metric;      // size * N * N pullback metric
  std::vector<double> volume;      // sqrt det of the pullback metric, 0 outside
  std::vector<double> inv_metric;  // size * N * N
  std::vector<double> self_weight; // chi_y at e_y(xi)
  std::vector<std::uint32_t> offsets;
  std::vector<ChartNeighbor> neighbors;
};

// Non-owning view on per-point volume weights and inverse metrics; a null
// view means the Euclidean metric.
struct MetricView {
  const double* volume = nullptr;
  const double* inv_metric = nullptr;

  static MetricView of(const ChartData& c) { return {c.volume.data(), c.inv_metric.data()}; }
};

class ChartSampler {
 public:
  ChartSampler(const PartitionOfUnity& pou, double spacing);

  const Lattice& lattice() const { return lattice_; }
  const PartitionOfUnity& partition() const { return *pou_; }
  const ManifoldSpec& spec() const { return pou_->spec(); }
  const Discretization& disc() const { return pou_->disc(); }
  double spacing() const { return lattice_.spacing(); }

  const ChartData& chart(std::size_t y) const;
  std::vector<double> sample(std::size_t y, const ScalarFn& u) const;
  GridFunction pullback(std::size_t y, const ScalarFn& u) const;
  // Charts whose rho-ball may meet one of the given coordinate balls.
  std::vector<std::size_t> charts_meeting(const std::vector<SupportBall>& balls) const;
  std::size_t cached_charts() const;
  void clear() const;

 private:
  std::unique_ptr<ChartData> build(std::size_t y) const;

  const PartitionOfUnity* pou_;
  Lattice lattice_;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::unique_ptr<ChartData>> cache_;
};

// u(e_y(xi)) on the lattice of Omega_radius (open ball).
GridFunction pullback(const ScalarFn& u, const ManifoldSpec& spec, const geometry::Frame& frame,
                      double radius, double spacing);

// Lattice gradient, N components per point, NaN outside the mask.
std::vector<double> grid_gradient(const Lattice& lat, std::span<const double> values);

struct TestFunction {
  double scale = 0.0;
  Vec center;
  std::vector<std::size_t> support;  // lattice indices
  std::vector<double> values;        // per support entry
  std::vector<double> grads;         // per support entry, N components
  double dual_norm = 0.0;            // ||t - Laplacian t||_{L^p'} (Euclidean)
};

// Mollifier bumps at scales rho/2, rho/3, rho/4 on lattices of centers with
// spacing half the scale, supported strictly inside Omega_rho and normalized
// to unit Euclidean H^{1,2} norm.
class TestBank {
 public:
  TestBank(const Lattice& lattice, double rho, double p);
  const Lattice& lattice() const { return lattice_; }
  const std::vector<TestFunction>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  // max over the bank of dual_norm: |<f, t>| <= constant * ||f||_{L^p} for
  // f supported in Omega_rho (Euclidean metric).
  double constant() const { return constant_; }
  double exponent() const { return p_; }

 private:
  Lattice lattice_;
  double p_;
  std::vector<TestFunction> elements_;
  double constant_ = 0.0;
};

// H^{1,2}(Omega_rho) pairing sum (f t + <df, dt>_g) sqrt(det g) h^N.
double weak_pairing(const GridFunction& f, const TestFunction& t, MetricView metric = {});
// All bank pairings, computing the gradient of f once.
std::vector<double> bank_pairings(const Lattice& lat, std::span<const double> f, const TestBank& bank,
                                  MetricView metric = {});
// Squared H^{1,2}(Omega_rho) norm of a grid function.
double grid_h12_square(const Lattice& lat, std::span<const double> f, MetricView metric = {});

enum class LimitStatus { Converged, Zero, Undetermined };
std::string to_string(LimitStatus s);

struct WeakLimit {
  GridFunction limit;
  LimitStatus status = LimitStatus::Undetermined;
  double scale = 0.0;          // max_k ||f_k||_{H^{1,2}}
  double max_increment = 0.0;  // largest pairing change across the last three samples
  double final_pairing = 0.0;  // largest |pairing| at the final sample
};

// Cauchy test of bank pairings across the last three samples with threshold
// tol_w * ||t|| * scale; zero when the last two samples pair below threshold.
// A converged limit is represented by the final sample.
WeakLimit weak_limit(const std::vector<GridFunction>& seq, const std::vector<MetricView>& metrics,
                     const TestBank& bank, double tol_w);

// Chart integrals: sum chi_y |f|^p vol h^N and sum chi_y (f^2 + |df|_g^2) vol h^N.
double chart_lp_power(const ChartSampler& s, std::size_t y, std::span<const double> f, double p);
double chart_h12_square(const ChartSampler& s, std::size_t y, std::span<const double> f);

// Norms on M through the partition of unity. An empty chart list means all of Y.
double lp_norm_M(const ChartSampler& s, const ScalarFn& u, double p, const std::vector<std::size_t>& charts = {});
double h12_norm_M(const ChartSampler& s, const ScalarFn& u, const std::vector<std::size_t>& charts = {});

struct SpotlightVerdict {
  std::vector<int> k_schedule;
  std::vector<double> lp_norms;
  std::vector<double> max_pairings;      // max over charts and bank
  std::vector<double> tracked_pairings;  // at the chart nearest the first support center
  std::vector<double> soundness_ratio;   // max_pairing / (lp_norm * bank constant)
  double bank_constant = 0.0;
  bool lp_decays = false;
  bool pairings_small = false;
  bool consistent = false;
};

// Compares L^p decay with decay of all spotlight pairings. Decay means the
// final value is below tol times the peak value along the schedule.
SpotlightVerdict spotlight_test(const SequenceFamily& family, const ChartSampler& sampler,
                                const TestBank& bank, const std::vector<int>& k_schedule, double p,
                                double tol);

}  // namespace conclab::spotlight
