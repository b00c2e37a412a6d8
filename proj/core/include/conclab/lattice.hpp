#pragma once

#include "conclab/types.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace conclab {

using LatticeCoord = std::array<int, kMaxDim>;

// The points hZ^N inside a Euclidean ball of the given radius, stored on the
// enclosing box [-n, n]^N (n = floor(radius / h)) in row-major order with the
// first axis slowest. Open balls use |z h| < radius, closed ones <=.
class Lattice {
 public:
  Lattice() = default;
  Lattice(int dim, double radius, double spacing, bool closed = false);

  int dim() const { return d_->dim; }
  double radius() const { return d_->radius; }
  double spacing() const { return d_->spacing; }
  bool closed() const { return d_->closed; }
  int half() const { return d_->half; }
  int extent() const { return 2 * d_->half + 1; }
  std::size_t size() const { return d_->size; }
  const std::vector<std::size_t>& active() const { return d_->active; }
  bool inside(std::size_t idx) const { return d_->mask[idx] != 0; }
  std::size_t stride(int axis) const { return d_->stride[static_cast<std::size_t>(axis)]; }
  bool valid() const { return static_cast<bool>(d_); }

  LatticeCoord coords(std::size_t idx) const;
  Vec point(std::size_t idx) const;
  // Index of an integer coordinate, empty outside the box.
  std::optional<std::size_t> index_of(const LatticeCoord& z) const;
  bool same_as(const Lattice& other) const;

 private:
  struct Data {
    int dim = 0;
    double radius = 0.0;
    double spacing = 0.0;
    bool closed = false;
    int half = 0;
    std::size_t size = 0;
    std::array<std::size_t, kMaxDim> stride{};
    std::vector<unsigned char> mask;
    std::vector<std::size_t> active;
  };
  std::shared_ptr<const Data> d_;
};

// Scalar samples on a lattice; entries outside the ball are NaN.
struct GridFunction {
  Lattice lattice;
  std::vector<double> values;

  static GridFunction zeros(const Lattice& lattice);
};

// Binary form: int32 dim, int32 flags (bit 0: closed ball), float64 radius,
// float64 spacing, then extent^dim float64 values row-major, NaN where masked.
void write_binary(const GridFunction& f, const std::filesystem::path& path);
GridFunction read_binary(const std::filesystem::path& path);
std::vector<unsigned char> encode_binary(const GridFunction& f);
GridFunction decode_binary(std::span<const unsigned char> bytes);
// CSV form: one row per in-ball point, columns xi_1..xi_N,value.
void write_csv(const GridFunction& f, const std::filesystem::path& path);
// 64-bit FNV-1a of the binary form, as 16 hex digits.
std::string content_hash(const GridFunction& f);

// Interpolation of ncomp-component samples at an arbitrary point. Returns
// false when the stencil touches masked or out-of-box entries (corners with
// zero weight are ignored).
bool interpolate_linear(const Lattice& lat, std::span<const double> values, int ncomp, const Vec& xi,
                        double* out);
bool interpolate_cubic(const Lattice& lat, std::span<const double> values, int ncomp, const Vec& xi,
                       double* out);

// Partial derivative along an axis at a lattice point: fourth-order central
// stencil when available, then second-order central, then second-order
// one-sided. Returns false when no stencil fits inside the mask.
bool lattice_derivative(const Lattice& lat, std::span<const double> values, int ncomp,
                        const std::span<const unsigned char> defined, std::size_t idx, int axis,
                        double* out);

// Second partial derivative d^2/dx_a dx_b at a lattice point with central
// stencils (second order). Returns false when the stencil leaves the mask.
bool lattice_second_derivative(const Lattice& lat, std::span<const double> values, int ncomp,
                               const std::span<const unsigned char> defined, std::size_t idx, int a,
                               int b, double* out);

}  // namespace conclab
