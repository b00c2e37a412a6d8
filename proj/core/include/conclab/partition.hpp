#pragma once

#include "conclab/discretization.hpp"
#include "conclab/geodesic.hpp"

#include <span>
#include <vector>

namespace conclab::profiles {

using discretization::Discretization;
using geometry::ManifoldSpec;

struct ChartWeight {
  std::size_t center;
  double value;
  Vec coords;  // log_y(x)
};

// chi_y(x) = b(d(x, y) / rho) / sum_{y'} b(d(x, y') / rho). The spec and the
// discretization must outlive the partition.
class PartitionOfUnity {
 public:
  PartitionOfUnity(const ManifoldSpec& spec, const Discretization& disc, double rho);

  const ManifoldSpec& spec() const { return *spec_; }
  const Discretization& disc() const { return *disc_; }
  double rho() const { return rho_; }
  const geometry::Frame& frame(std::size_t y) const { return frames_[y]; }

  // Nonzero weights at x, ascending by center index. Throws CoveringGap when
  // no center lies within rho.
  std::vector<ChartWeight> evaluate(const Vec& x) const;
  double weight(std::size_t y, const Vec& x) const;

  double derivative_bound = 0.0;  // max |d chi_y|_g over the build test points

 private:
  const ManifoldSpec* spec_;
  const Discretization* disc_;
  double rho_;
  std::vector<geometry::Frame> frames_;
};

struct PartitionCheck {
  double max_sum_error = 0.0;
  double max_gradient = 0.0;
  std::size_t test_points = 0;
};

// Builds the partition and checks it on a lattice of test points of the
// region (spacing epsilon / 2 by default; a negative spacing skips the check).
PartitionOfUnity build_partition(const ManifoldSpec& spec, const Discretization& disc, double rho,
                                 double test_spacing = 0.0);

PartitionCheck check_partition(const PartitionOfUnity& pou, std::span<const Vec> test_points);

}  // namespace conclab::profiles
