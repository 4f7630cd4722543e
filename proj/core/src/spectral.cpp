#include "cit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cit/error.hpp"
#include "cit/parallel.hpp"

namespace cit {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Visits every stored mode with its wavenumber.
template <class F>
void for_modes(int n, F&& f) {
  const TorusGrid g(n);
  const int h = g.half();
  std::size_t idx = 0;
  for (int i0 = 0; i0 < n; ++i0) {
    const int k0 = g.wavenumber(i0);
    for (int i1 = 0; i1 < n; ++i1) {
      const int k1 = g.wavenumber(i1);
      for (int i2 = 0; i2 < h; ++i2, ++idx) f(idx, std::array<int, 3>{k0, k1, i2});
    }
  }
}

template <int N>
constexpr double comp_weight(int a) {
  if constexpr (N == 6) return sym_diagonal(a) ? 1.0 : 2.0;
  (void)a;
  return 1.0;
}

}  // namespace

GridScalar grid_scalar(int n, std::span<const double> values) {
  GridScalar g(n);
  if (values.size() != g.size())
    throw Error("spectral", "size mismatch: got " + std::to_string(values.size()) + " values for n=" +
                                std::to_string(n));
  std::copy(values.begin(), values.end(), g.v[0].begin());
  return g;
}

SpectralScalarField derivative(const SpectralScalarField& f, int dim) {
  SpectralScalarField out(f.n);
  const TorusGrid g(f.n);
  for_modes(f.n, [&](std::size_t i, const std::array<int, 3>& k) {
    if (!g.nyquist(k)) out.c[0][i] = cplx(0.0, k[dim]) * f.c[0][i];
  });
  return out;
}

SpectralVectorField gradient(const SpectralScalarField& f) {
  SpectralVectorField out(f.n);
  for (int d = 0; d < 3; ++d) out.c[d] = derivative(f, d).c[0];
  return out;
}

SpectralScalarField divergence(const SpectralVectorField& u) {
  SpectralScalarField out(u.n);
  const TorusGrid g(u.n);
  for_modes(u.n, [&](std::size_t i, const std::array<int, 3>& k) {
    if (g.nyquist(k)) return;
    out.c[0][i] = cplx(0.0, 1.0) * (double(k[0]) * u.c[0][i] + double(k[1]) * u.c[1][i] +
                                    double(k[2]) * u.c[2][i]);
  });
  return out;
}

SpectralVectorField divergence(const SymTensorField& t) {
  SpectralVectorField out(t.n);
  const TorusGrid g(t.n);
  for_modes(t.n, [&](std::size_t i, const std::array<int, 3>& k) {
    if (g.nyquist(k)) return;
    for (int r = 0; r < 3; ++r) {
      cplx s = 0;
      for (int j = 0; j < 3; ++j) s += double(k[j]) * t.c[sym_index(r, j)][i];
      out.c[r][i] = cplx(0.0, 1.0) * s;
    }
  });
  return out;
}

SpectralVectorField curl(const SpectralVectorField& u) {
  SpectralVectorField out(u.n);
  const TorusGrid g(u.n);
  const cplx I(0.0, 1.0);
  for_modes(u.n, [&](std::size_t i, const std::array<int, 3>& k) {
    if (g.nyquist(k)) return;
    const cplx a = u.c[0][i], b = u.c[1][i], c = u.c[2][i];
    out.c[0][i] = I * (double(k[1]) * c - double(k[2]) * b);
    out.c[1][i] = I * (double(k[2]) * a - double(k[0]) * c);
    out.c[2][i] = I * (double(k[0]) * b - double(k[1]) * a);
  });
  return out;
}

std::array<SpectralScalarField, 9> gradient_tensor(const SpectralVectorField& u) {
  std::array<SpectralScalarField, 9> out;
  for (int i = 0; i < 3; ++i) {
    SpectralScalarField comp(u.n);
    comp.c[0] = u.c[i];
    for (int j = 0; j < 3; ++j) out[3 * i + j] = derivative(comp, j);
  }
  return out;
}

template <int N>
SpectralField<N> fractional_laplacian(const SpectralField<N>& f, double alpha) {
  if (alpha < 0) throw Error("spectral", "fractional Laplacian needs alpha >= 0");
  SpectralField<N> out(f.n);
  for_modes(f.n, [&](std::size_t i, const std::array<int, 3>& k) {
    const double kk = double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
    if (kk == 0) return;
    const double m = alpha == 1.0 ? kk : std::pow(kk, alpha);
    for (int a = 0; a < N; ++a) out.c[a][i] = m * f.c[a][i];
  });
  return out;
}

template <int N>
SpectralField<N> low_pass(const SpectralField<N>& u, double f, FreqNorm norm) {
  if (f < 0) throw Error("spectral", "low-pass bound must be non-negative");
  SpectralField<N> out = u;
  for_modes(u.n, [&](std::size_t i, const std::array<int, 3>& k) {
    double size;
    if (norm == FreqNorm::euclidean)
      size = std::sqrt(double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2]);
    else
      size = std::max({std::abs(k[0]), std::abs(k[1]), std::abs(k[2])});
    if (size > f)
      for (int a = 0; a < N; ++a) out.c[a][i] = 0.0;
  });
  return out;
}

template <int N>
void strip_nyquist(SpectralField<N>& u) {
  const TorusGrid g(u.n);
  for_modes(u.n, [&](std::size_t i, const std::array<int, 3>& k) {
    if (g.nyquist(k))
      for (int a = 0; a < N; ++a) u.c[a][i] = 0.0;
  });
}

SpectralVectorField leray_project(const SpectralVectorField& u) {
  SpectralVectorField out = u;
  for_modes(u.n, [&](std::size_t i, const std::array<int, 3>& k) {
    const double kk = double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
    if (kk == 0) return;
    const cplx kd = double(k[0]) * u.c[0][i] + double(k[1]) * u.c[1][i] + double(k[2]) * u.c[2][i];
    for (int a = 0; a < 3; ++a) out.c[a][i] -= double(k[a]) * kd / kk;
  });
  return out;
}

SymTensorField inverse_divergence(const SpectralVectorField& u, double mean_tol) {
  double biggest = 0, zero = 0;
  for (int a = 0; a < 3; ++a) {
    zero = std::max(zero, std::abs(u.c[a][0]));
    for (const auto& x : u.c[a]) biggest = std::max(biggest, std::abs(x));
  }
  if (zero > mean_tol * biggest && zero > 0)
    throw Error("spectral", "inverse divergence needs a mean-free argument (|mean| = " +
                                std::to_string(zero) + ")");
  SymTensorField out(u.n);
  const TorusGrid g(u.n);
  const cplx I(0.0, 1.0);
  for_modes(u.n, [&](std::size_t i, const std::array<int, 3>& k) {
    if (g.nyquist(k)) return;
    const double kk = double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
    if (kk == 0) return;
    const cplx uh[3] = {u.c[0][i], u.c[1][i], u.c[2][i]};
    const cplx kd = double(k[0]) * uh[0] + double(k[1]) * uh[1] + double(k[2]) * uh[2];
    for (int c = 0; c < 6; ++c) {
      const int a = kSymPairs[c][0], b = kSymPairs[c][1];
      const double delta = a == b ? 1.0 : 0.0;
      out.c[c][i] = -I * (double(k[a]) * uh[b] + double(k[b]) * uh[a]) / kk +
                    0.5 * (delta + double(k[a]) * k[b] / kk) * I * kd / kk;
    }
  });
  return out;
}

SpectralScalarField trace(const SymTensorField& t) {
  SpectralScalarField s(t.n);
  for (std::size_t i = 0; i < t.size(); ++i) s.c[0][i] = t.c[0][i] + t.c[3][i] + t.c[5][i];
  return s;
}

SymTensorField trace_free(const SymTensorField& t) {
  SymTensorField out = t;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const cplx third = (t.c[0][i] + t.c[3][i] + t.c[5][i]) / 3.0;
    out.c[0][i] -= third;
    out.c[3][i] -= third;
    out.c[5][i] -= third;
  }
  return out;
}

SymTensorField times_identity(const SpectralScalarField& s) {
  SymTensorField out(s.n);
  out.c[0] = s.c[0];
  out.c[3] = s.c[0];
  out.c[5] = s.c[0];
  return out;
}

// ------------------------------------------------------------------ padding

int padded_size(int n) { return 3 * n / 2; }

namespace {
// Index in a size-m half spectrum of the mode with wavenumber k.
inline std::size_t padded_index(const std::array<int, 3>& k, int m) {
  const int w0 = k[0] >= 0 ? k[0] : k[0] + m;
  const int w1 = k[1] >= 0 ? k[1] : k[1] + m;
  return (std::size_t(w0) * m + w1) * (m / 2 + 1) + k[2];
}
}  // namespace

template <int N>
GridField<N> to_padded(const SpectralField<N>& u) {
  const int m = padded_size(u.n);
  const TorusGrid g(u.n);
  std::vector<cplx> big(std::size_t(m) * m * (m / 2 + 1));
  GridField<N> out;
  out.n = m;
  for (int a = 0; a < N; ++a) {
    std::fill(big.begin(), big.end(), cplx{});
    for_modes(u.n, [&](std::size_t i, const std::array<int, 3>& k) {
      if (!g.nyquist(k)) big[padded_index(k, m)] = u.c[a][i];
    });
    out.v[a].resize(std::size_t(m) * m * m);
    fft_inverse(m, big.data(), out.v[a].data());
  }
  return out;
}

template <int N>
SpectralField<N> from_padded(const GridField<N>& gbig, int n) {
  const int m = gbig.n;
  if (m != padded_size(n)) throw Error("spectral", "padded grid size mismatch");
  const TorusGrid g(n);
  std::vector<cplx> big(std::size_t(m) * m * (m / 2 + 1));
  SpectralField<N> out(n);
  for (int a = 0; a < N; ++a) {
    fft_forward(m, gbig.v[a].data(), big.data());
    for_modes(n, [&](std::size_t i, const std::array<int, 3>& k) {
      if (!g.nyquist(k)) out.c[a][i] = big[padded_index(k, m)];
    });
  }
  return out;
}

SymTensorField sym_outer(const SpectralVectorField& u, const SpectralVectorField& w) {
  const GridVector pu = to_padded(u);
  const GridVector pw = (&u == &w) ? pu : to_padded(w);
  GridTensor t;
  t.n = pu.n;
  const std::size_t np = pu.size();
  for (int c = 0; c < 6; ++c) {
    const int a = kSymPairs[c][0], b = kSymPairs[c][1];
    t.v[c].resize(np);
    for (std::size_t x = 0; x < np; ++x)
      t.v[c][x] = 0.5 * (pu.v[a][x] * pw.v[b][x] + pu.v[b][x] * pw.v[a][x]);
  }
  return from_padded(t, u.n);
}

SpectralVectorField advect(const SpectralVectorField& u, const SpectralVectorField& w) {
  const GridVector pu = to_padded(u);
  GridVector out;
  out.n = pu.n;
  const std::size_t np = pu.size();
  for (int i = 0; i < 3; ++i) out.v[i].assign(np, 0.0);
  SpectralScalarField comp(w.n);
  for (int i = 0; i < 3; ++i) {
    comp.c[0] = w.c[i];
    for (int j = 0; j < 3; ++j) {
      const GridScalar d = to_padded(derivative(comp, j));
      for (std::size_t x = 0; x < np; ++x) out.v[i][x] += pu.v[j][x] * d.v[0][x];
    }
  }
  return from_padded(out, u.n);
}

SpectralScalarField dot(const SpectralVectorField& u, const SpectralVectorField& w) {
  const GridVector pu = to_padded(u);
  const GridVector pw = (&u == &w) ? pu : to_padded(w);
  GridScalar s;
  s.n = pu.n;
  s.v[0].assign(pu.size(), 0.0);
  for (int a = 0; a < 3; ++a)
    for (std::size_t x = 0; x < pu.size(); ++x) s.v[0][x] += pu.v[a][x] * pw.v[a][x];
  return from_padded(s, u.n);
}

// -------------------------------------------------------------------- norms

template <int N>
double c0_norm(const GridField<N>& g) {
  double best = 0;
  for (std::size_t x = 0; x < g.size(); ++x) {
    double s = 0;
    for (int a = 0; a < N; ++a) s += comp_weight<N>(a) * g.v[a][x] * g.v[a][x];
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

template <int N>
double c1_norm(const SpectralField<N>& u) {
  const GridField<N> g = to_physical(u);
  std::vector<double> acc(g.size(), 0.0);
  SpectralScalarField comp(u.n);
  for (int a = 0; a < N; ++a) {
    comp.c[0] = u.c[a];
    for (int j = 0; j < 3; ++j) {
      const GridScalar d = to_physical(derivative(comp, j));
      for (std::size_t x = 0; x < acc.size(); ++x) acc[x] += comp_weight<N>(a) * d.v[0][x] * d.v[0][x];
    }
  }
  double grad = 0;
  for (double s : acc) grad = std::max(grad, s);
  return c0_norm(g) + std::sqrt(grad);
}

template <int N>
double l2_norm(const SpectralField<N>& u) {
  const TorusGrid g(u.n);
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double m = 0;
    for (int a = 0; a < N; ++a) m += comp_weight<N>(a) * std::norm(u.c[a][i]);
    s += g.weight(i) * m;
  }
  return std::sqrt(s * kTwoPi * kTwoPi * kTwoPi);
}

template <int N>
double holder_seminorm(const GridField<N>& g, const HolderOptions& opt) {
  if (!(opt.theta > 0 && opt.theta < 1)) throw Error("spectral", "Hölder exponent must lie in (0, 1)");
  const int n = g.n;
  const std::size_t np = g.size();
  static const int dirs[13][3] = {{1, 0, 0},  {0, 1, 0},  {0, 0, 1},  {1, 1, 0},  {1, -1, 0},
                                  {1, 0, 1},  {1, 0, -1}, {0, 1, 1},  {0, 1, -1}, {1, 1, 1},
                                  {1, 1, -1}, {1, -1, 1}, {-1, 1, 1}};
  // Base points: every node, or an additive-recurrence subsample of it.
  std::vector<std::size_t> bases;
  if (np <= opt.max_base_points) {
    bases.resize(np);
    for (std::size_t i = 0; i < np; ++i) bases[i] = i;
  } else {
    const double phi = 1.2207440846057596;  // root of x^4 = x + 1
    const double al[3] = {1.0 / phi, 1.0 / (phi * phi), 1.0 / (phi * phi * phi)};
    const double shift = static_cast<double>(opt.seed % 1000003) / 1000003.0;
    for (std::size_t s = 0; s < opt.max_base_points; ++s) {
      std::size_t idx = 0;
      for (int d = 0; d < 3; ++d) {
        const double f = std::fmod(shift + (s + 1) * al[d], 1.0);
        idx = idx * n + std::min(n - 1, static_cast<int>(f * n));
      }
      bases.push_back(idx);
    }
  }
  const double h = kTwoPi / n;
  std::vector<double> best(bases.size(), 0.0);
  parallel_for(bases.size(), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t idx = bases[b];
      const int x0 = static_cast<int>(idx / (std::size_t(n) * n));
      const int x1 = static_cast<int>((idx / n) % n);
      const int x2 = static_cast<int>(idx % n);
      double local = 0;
      for (const auto& d : dirs) {
        for (int s = 1; s <= n / 2; ++s) {
          int o[3] = {d[0] * s, d[1] * s, d[2] * s};
          double dist2 = 0;
          for (int k = 0; k < 3; ++k) {
            const int w = std::abs(o[k]) % n;
            const int t = std::min(w, n - w);
            dist2 += double(t) * t;
          }
          if (dist2 == 0) continue;
          const int y0 = ((x0 + o[0]) % n + n) % n;
          const int y1 = ((x1 + o[1]) % n + n) % n;
          const int y2 = ((x2 + o[2]) % n + n) % n;
          const std::size_t jdx = (std::size_t(y0) * n + y1) * n + y2;
          double diff2 = 0;
          for (int a = 0; a < N; ++a) {
            const double dv = g.v[a][idx] - g.v[a][jdx];
            diff2 += comp_weight<N>(a) * dv * dv;
          }
          const double q = std::sqrt(diff2) / std::pow(std::sqrt(dist2) * h, opt.theta);
          local = std::max(local, q);
        }
      }
      best[b] = local;
    }
  });
  double out = 0;
  for (double x : best) out = std::max(out, x);
  return out;
}

template <int N>
NormReport field_norms(const SpectralField<N>& u, double theta) {
  NormReport r;
  r.theta = theta;
  const GridField<N> g = to_physical(u);
  r.c0 = c0_norm(g);
  r.c1 = c1_norm(u);
  HolderOptions opt;
  opt.theta = theta;
  r.holder = r.c0 + holder_seminorm(g, opt);
  r.l2 = l2_norm(u);
  return r;
}

double divergence_defect(const SpectralVectorField& u) {
  double big = 0, bad = 0;
  const TorusGrid g(u.n);
  for_modes(u.n, [&](std::size_t i, const std::array<int, 3>& k) {
    const cplx kd = double(k[0]) * u.c[0][i] + double(k[1]) * u.c[1][i] + double(k[2]) * u.c[2][i];
    const double kn = std::sqrt(double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2]);
    for (int a = 0; a < 3; ++a) big = std::max(big, std::abs(u.c[a][i]));
    if (kn > 0 && !g.nyquist(k)) bad = std::max(bad, std::abs(kd) / kn);
  });
  return big > 0 ? bad / big : 0.0;
}

double trace_defect(const SymTensorField& t) {
  const GridTensor g = to_physical(t);
  double tr = 0;
  for (std::size_t x = 0; x < g.size(); ++x)
    tr = std::max(tr, std::abs(g.v[0][x] + g.v[3][x] + g.v[5][x]));
  const double scale = c0_norm(g);
  return scale > 0 ? tr / scale : tr;
}

#define CIT_INSTANTIATE(N)                                                              \
  template SpectralField<N> fractional_laplacian(const SpectralField<N>&, double);     \
  template SpectralField<N> low_pass(const SpectralField<N>&, double, FreqNorm);       \
  template void strip_nyquist(SpectralField<N>&);                                      \
  template GridField<N> to_padded(const SpectralField<N>&);                            \
  template SpectralField<N> from_padded(const GridField<N>&, int);                     \
  template double c0_norm(const GridField<N>&);                                        \
  template double c1_norm(const SpectralField<N>&);                                    \
  template double l2_norm(const SpectralField<N>&);                                    \
  template double holder_seminorm(const GridField<N>&, const HolderOptions&);          \
  template NormReport field_norms(const SpectralField<N>&, double);
CIT_INSTANTIATE(1)
CIT_INSTANTIATE(3)
CIT_INSTANTIATE(6)
#undef CIT_INSTANTIATE

}  // namespace cit
