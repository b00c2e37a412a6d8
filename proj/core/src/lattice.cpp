#include "conclab/lattice.hpp"

#include "conclab/error.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace conclab {

Lattice::Lattice(int dim, double radius, double spacing, bool closed) {
  if (dim < 1 || dim > kMaxDim) fail(ErrorCode::InvalidArgument, "lattice dimension out of range");
  if (!(spacing > 0.0) || !(radius > 0.0)) fail(ErrorCode::InvalidArgument, "lattice radius and spacing must be positive");
  auto d = std::make_shared<Data>();
  d->dim = dim;
  d->radius = radius;
  d->spacing = spacing;
  d->closed = closed;
  d->half = static_cast<int>(std::floor(radius / spacing + 1e-9));
  const std::size_t ext = static_cast<std::size_t>(2 * d->half + 1);
  std::size_t s = 1;
  for (int m = dim - 1; m >= 0; --m) {
    d->stride[static_cast<std::size_t>(m)] = s;
    s *= ext;
  }
  d->size = s;
  if (s > (std::size_t{1} << 28)) fail(ErrorCode::InvalidArgument, "lattice too large");
  d->mask.assign(s, 0);
  const double r2 = radius * radius;
  const double slack = 1e-12 * r2;
  for (std::size_t idx = 0; idx < s; ++idx) {
    std::size_t rem = idx;
    double q = 0.0;
    for (int m = 0; m < dim; ++m) {
      const std::size_t st = d->stride[static_cast<std::size_t>(m)];
      const int z = static_cast<int>(rem / st) - d->half;
      rem %= st;
      q += (z * spacing) * (z * spacing);
    }
    const bool in = closed ? q <= r2 + slack : q < r2 - slack;
    if (in) {
      d->mask[idx] = 1;
      d->active.push_back(idx);
    }
  }
  d_ = std::move(d);
}

LatticeCoord Lattice::coords(std::size_t idx) const {
  LatticeCoord z{};
  for (int m = 0; m < d_->dim; ++m) {
    const std::size_t st = d_->stride[static_cast<std::size_t>(m)];
    z[static_cast<std::size_t>(m)] = static_cast<int>(idx / st) - d_->half;
    idx %= st;
  }
  return z;
}

Vec Lattice::point(std::size_t idx) const {
  const LatticeCoord z = coords(idx);
  Vec x(d_->dim);
  for (int m = 0; m < d_->dim; ++m) x[m] = z[static_cast<std::size_t>(m)] * d_->spacing;
  return x;
}

std::optional<std::size_t> Lattice::index_of(const LatticeCoord& z) const {
  std::size_t idx = 0;
  for (int m = 0; m < d_->dim; ++m) {
    const int zm = z[static_cast<std::size_t>(m)];
    if (zm < -d_->half || zm > d_->half) return std::nullopt;
    idx += static_cast<std::size_t>(zm + d_->half) * d_->stride[static_cast<std::size_t>(m)];
  }
  return idx;
}

bool Lattice::same_as(const Lattice& o) const {
  if (!d_ || !o.d_) return d_ == o.d_;
  return d_->dim == o.d_->dim && d_->radius == o.d_->radius && d_->spacing == o.d_->spacing &&
         d_->closed == o.d_->closed;
}

GridFunction GridFunction::zeros(const Lattice& lattice) {
  GridFunction f;
  f.lattice = lattice;
  f.values.assign(lattice.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t idx : lattice.active()) f.values[idx] = 0.0;
  return f;
}

namespace {

template <class T>
void put(std::vector<unsigned char>& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <class T>
T get(std::span<const unsigned char> in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) fail(ErrorCode::ParseError, "truncated grid payload");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::vector<unsigned char> encode_binary(const GridFunction& f) {
  std::vector<unsigned char> out;
  out.reserve(24 + 8 * f.values.size());
  put<std::int32_t>(out, f.lattice.dim());
  put<std::int32_t>(out, f.lattice.closed() ? 1 : 0);
  put<double>(out, f.lattice.radius());
  put<double>(out, f.lattice.spacing());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    put<double>(out, f.lattice.inside(i) ? f.values[i] : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

GridFunction decode_binary(std::span<const unsigned char> bytes) {
  std::size_t pos = 0;
  const auto dim = get<std::int32_t>(bytes, pos);
  const auto flags = get<std::int32_t>(bytes, pos);
  const auto radius = get<double>(bytes, pos);
  const auto spacing = get<double>(bytes, pos);
  if (dim < 1 || dim > kMaxDim) fail(ErrorCode::ParseError, "bad grid dimension");
  GridFunction f;
  f.lattice = Lattice(dim, radius, spacing, (flags & 1) != 0);
  f.values.resize(f.lattice.size());
  for (double& v : f.values) v = get<double>(bytes, pos);
  if (pos != bytes.size()) fail(ErrorCode::ParseError, "trailing bytes in grid payload");
  return f;
}

void write_binary(const GridFunction& f, const std::filesystem::path& path) {
  const auto bytes = encode_binary(f);
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoError, "cannot open " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GridFunction read_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_binary(bytes);
}

void write_csv(const GridFunction& f, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::IoError, "cannot open " + path.string());
  const int n = f.lattice.dim();
  for (int m = 0; m < n; ++m) os << "xi_" << (m + 1) << ',';
  os << "value\n";
  os << std::setprecision(17);
  for (std::size_t idx : f.lattice.active()) {
    const Vec x = f.lattice.point(idx);
    for (int m = 0; m < n; ++m) os << x[m] << ',';
    os << f.values[idx] << '\n';
  }
}

std::string content_hash(const GridFunction& f) {
  const auto bytes = encode_binary(f);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// Walks the tensor-product stencil with per-axis offsets and weights.
bool accumulate(const Lattice& lat, std::span<const double> values, int ncomp, const LatticeCoord& base,
                const std::array<std::array<double, 4>, kMaxDim>& w, int width, int first_offset,
                double* out) {
  const int n = lat.dim();
  for (int c = 0; c < ncomp; ++c) out[c] = 0.0;
  int total = 1;
  for (int m = 0; m < n; ++m) total *= width;
  for (int t = 0; t < total; ++t) {
    int rem = t;
    double weight = 1.0;
    LatticeCoord z{};
    for (int m = n - 1; m >= 0; --m) {
      const int o = rem % width;
      rem /= width;
      weight *= w[static_cast<std::size_t>(m)][static_cast<std::size_t>(o)];
      z[static_cast<std::size_t>(m)] = base[static_cast<std::size_t>(m)] + o + first_offset;
    }
    if (weight == 0.0) continue;
    const auto idx = lat.index_of(z);
    if (!idx || !lat.inside(*idx)) return false;
    const double* v = values.data() + *idx * static_cast<std::size_t>(ncomp);
    for (int c = 0; c < ncomp; ++c) {
      if (std::isnan(v[c])) return false;
      out[c] += weight * v[c];
    }
  }
  return true;
}

}  // namespace

bool interpolate_linear(const Lattice& lat, std::span<const double> values, int ncomp, const Vec& xi,
                        double* out) {
  const int n = lat.dim();
  const double h = lat.spacing();
  LatticeCoord base{};
  std::array<std::array<double, 4>, kMaxDim> w{};
  for (int m = 0; m < n; ++m) {
    const double s = xi[m] / h;
    const double f = std::floor(s);
    const double t = s - f;
    base[static_cast<std::size_t>(m)] = static_cast<int>(f);
    w[static_cast<std::size_t>(m)] = {1.0 - t, t, 0.0, 0.0};
  }
  return accumulate(lat, values, ncomp, base, w, 2, 0, out);
}

bool interpolate_cubic(const Lattice& lat, std::span<const double> values, int ncomp, const Vec& xi,
                       double* out) {
  const int n = lat.dim();
  const double h = lat.spacing();
  LatticeCoord base{};
  std::array<std::array<double, 4>, kMaxDim> w{};
  for (int m = 0; m < n; ++m) {
    const double s = xi[m] / h;
    const double f = std::floor(s);
    const double t = s - f;
    base[static_cast<std::size_t>(m)] = static_cast<int>(f);
    if (t == 0.0) {
      w[static_cast<std::size_t>(m)] = {0.0, 1.0, 0.0, 0.0};
    } else {
      // Lagrange basis on nodes -1, 0, 1, 2.
      w[static_cast<std::size_t>(m)] = {-t * (t - 1.0) * (t - 2.0) / 6.0,
                                        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                                        -(t + 1.0) * t * (t - 2.0) / 2.0,
                                        (t + 1.0) * t * (t - 1.0) / 6.0};
    }
  }
  return accumulate(lat, values, ncomp, base, w, 4, -1, out);
}

namespace {

bool usable(const Lattice& lat, std::span<const unsigned char> defined, std::span<const double> values,
            int ncomp, LatticeCoord z, std::size_t& idx) {
  const auto i = lat.index_of(z);
  if (!i || !lat.inside(*i)) return false;
  if (!defined.empty() && !defined[*i]) return false;
  if (std::isnan(values[*i * static_cast<std::size_t>(ncomp)])) return false;
  idx = *i;
  return true;
}

}  // namespace

bool lattice_derivative(const Lattice& lat, std::span<const double> values, int ncomp,
                        const std::span<const unsigned char> defined, std::size_t idx, int axis,
                        double* out) {
  const double h = lat.spacing();
  const LatticeCoord z0 = lat.coords(idx);
  auto shifted = [&](int o, std::size_t& j) {
    LatticeCoord z = z0;
    z[static_cast<std::size_t>(axis)] += o;
    return usable(lat, defined, values, ncomp, z, j);
  };
  auto val = [&](std::size_t j, int c) { return values[j * static_cast<std::size_t>(ncomp) + static_cast<std::size_t>(c)]; };
  std::size_t m2 = 0, m1 = 0, p1 = 0, p2 = 0, c0 = 0;
  const bool hm1 = shifted(-1, m1), hp1 = shifted(1, p1);
  if (hm1 && hp1) {
    if (shifted(-2, m2) && shifted(2, p2)) {
      for (int c = 0; c < ncomp; ++c)
        out[c] = (val(m2, c) - 8.0 * val(m1, c) + 8.0 * val(p1, c) - val(p2, c)) / (12.0 * h);
      return true;
    }
    for (int c = 0; c < ncomp; ++c) out[c] = (val(p1, c) - val(m1, c)) / (2.0 * h);
    return true;
  }
  if (!shifted(0, c0)) return false;
  if (hp1 && shifted(2, p2)) {
    for (int c = 0; c < ncomp; ++c) out[c] = (-3.0 * val(c0, c) + 4.0 * val(p1, c) - val(p2, c)) / (2.0 * h);
    return true;
  }
  if (hm1 && shifted(-2, m2)) {
    for (int c = 0; c < ncomp; ++c) out[c] = (3.0 * val(c0, c) - 4.0 * val(m1, c) + val(m2, c)) / (2.0 * h);
    return true;
  }
  return false;
}

bool lattice_second_derivative(const Lattice& lat, std::span<const double> values, int ncomp,
                               const std::span<const unsigned char> defined, std::size_t idx, int a,
                               int b, double* out) {
  const double h = lat.spacing();
  const LatticeCoord z0 = lat.coords(idx);
  auto at = [&](int oa, int ob, std::size_t& j) {
    LatticeCoord z = z0;
    z[static_cast<std::size_t>(a)] += oa;
    z[static_cast<std::size_t>(b)] += ob;
    return usable(lat, defined, values, ncomp, z, j);
  };
  auto val = [&](std::size_t j, int c) { return values[j * static_cast<std::size_t>(ncomp) + static_cast<std::size_t>(c)]; };
  if (a == b) {
    std::size_t m, c0, p;
    if (!at(-1, 0, m) || !at(0, 0, c0) || !at(1, 0, p)) return false;
    for (int c = 0; c < ncomp; ++c) out[c] = (val(p, c) - 2.0 * val(c0, c) + val(m, c)) / (h * h);
    return true;
  }
  std::size_t pp, pm, mp, mm;
  if (!at(1, 1, pp) || !at(1, -1, pm) || !at(-1, 1, mp) || !at(-1, -1, mm)) return false;
  for (int c = 0; c < ncomp; ++c) out[c] = (val(pp, c) - val(pm, c) - val(mp, c) + val(mm, c)) / (4.0 * h * h);
  return true;
}

}  // namespace conclab
