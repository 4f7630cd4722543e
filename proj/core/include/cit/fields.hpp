#pragma once
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace cit {

using cplx = std::complex<double>;

/// Uniform grid on [0, 2pi)^3 with n nodes per axis.
/// Spectral storage follows the real-to-complex half layout:
/// index (i0*n + i1)*(n/2+1) + i2 holds wavenumber (k(i0), k(i1), i2).
struct TorusGrid {
  int n = 0;
  double dealias_fraction = 2.0 / 3.0;

  TorusGrid() = default;
  explicit TorusGrid(int points, double dealias = 2.0 / 3.0);

  std::size_t points() const { return std::size_t(n) * n * n; }
  int half() const { return n / 2 + 1; }
  std::size_t modes() const { return std::size_t(n) * n * half(); }
  double spacing() const { return 2.0 * std::numbers::pi / n; }
  double node(int j) const { return spacing() * j; }
  int wavenumber(int idx) const { return idx <= n / 2 ? idx : idx - n; }
  std::array<int, 3> mode(std::size_t flat) const {
    const int h = half();
    const int i2 = static_cast<int>(flat % h);
    const std::size_t rest = flat / h;
    const int i1 = static_cast<int>(rest % n);
    const int i0 = static_cast<int>(rest / n);
    return {wavenumber(i0), wavenumber(i1), i2};
  }
  /// Any component at +-n/2: odd derivatives of these modes are ill defined.
  bool nyquist(const std::array<int, 3>& k) const {
    const int h = n / 2;
    return std::abs(k[0]) == h || std::abs(k[1]) == h || k[2] == h;
  }
  /// Multiplicity of a stored half-spectrum coefficient in the full spectrum.
  double weight(std::size_t flat) const {
    const int i2 = static_cast<int>(flat % half());
    return (i2 == 0 || i2 == n / 2) ? 1.0 : 2.0;
  }
  bool operator==(const TorusGrid& o) const { return n == o.n; }
};

/// N scalar components stored as Fourier coefficients of real fields.
template <int N>
struct SpectralField {
  int n = 0;
  std::array<std::vector<cplx>, N> c;

  SpectralField() = default;
  explicit SpectralField(int points) : n(points) {
    for (auto& v : c) v.assign(std::size_t(points) * points * (points / 2 + 1), cplx{});
  }
  explicit SpectralField(const TorusGrid& g) : SpectralField(g.n) {}
  TorusGrid grid() const { return TorusGrid(n); }
  std::size_t size() const { return c[0].size(); }

  SpectralField& operator+=(const SpectralField& o) {
    for (int a = 0; a < N; ++a)
      for (std::size_t i = 0; i < c[a].size(); ++i) c[a][i] += o.c[a][i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    for (int a = 0; a < N; ++a)
      for (std::size_t i = 0; i < c[a].size(); ++i) c[a][i] -= o.c[a][i];
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (auto& v : c)
      for (auto& x : v) x *= s;
    return *this;
  }
  /// this += s * o
  void axpy(double s, const SpectralField& o) {
    for (int a = 0; a < N; ++a)
      for (std::size_t i = 0; i < c[a].size(); ++i) c[a][i] += s * o.c[a][i];
  }
  friend SpectralField operator+(SpectralField x, const SpectralField& y) { return x += y; }
  friend SpectralField operator-(SpectralField x, const SpectralField& y) { return x -= y; }
  friend SpectralField operator*(double s, SpectralField x) { return x *= s; }
};

/// N scalar components sampled on the physical grid.
template <int N>
struct GridField {
  int n = 0;
  std::array<std::vector<double>, N> v;

  GridField() = default;
  explicit GridField(int points) : n(points) {
    for (auto& x : v) x.assign(std::size_t(points) * points * points, 0.0);
  }
  explicit GridField(const TorusGrid& g) : GridField(g.n) {}
  std::size_t size() const { return v[0].size(); }

  GridField& operator+=(const GridField& o) {
    for (int a = 0; a < N; ++a)
      for (std::size_t i = 0; i < v[a].size(); ++i) v[a][i] += o.v[a][i];
    return *this;
  }
  GridField& operator-=(const GridField& o) {
    for (int a = 0; a < N; ++a)
      for (std::size_t i = 0; i < v[a].size(); ++i) v[a][i] -= o.v[a][i];
    return *this;
  }
  GridField& operator*=(double s) {
    for (auto& x : v)
      for (auto& y : x) y *= s;
    return *this;
  }
  friend GridField operator+(GridField x, const GridField& y) { return x += y; }
  friend GridField operator-(GridField x, const GridField& y) { return x -= y; }
};

using SpectralScalarField = SpectralField<1>;
using SpectralVectorField = SpectralField<3>;
/// Components ordered (11, 12, 13, 22, 23, 33).
using SymTensorField = SpectralField<6>;
using GridScalar = GridField<1>;
using GridVector = GridField<3>;
using GridTensor = GridField<6>;

/// Position of entry (i, j) in the six stored symmetric components.
constexpr int sym_index(int i, int j) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  return i == 0 ? j : (i == 1 ? 2 + j : 5);
}
constexpr std::array<std::array<int, 2>, 6> kSymPairs{{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};
constexpr bool sym_diagonal(int c) { return c == 0 || c == 3 || c == 5; }

}  // namespace cit
