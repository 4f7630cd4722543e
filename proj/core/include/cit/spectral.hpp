#pragma once
#include <array>
#include <cstdint>
#include <span>

#include "cit/fft.hpp"
#include "cit/fields.hpp"

namespace cit {

// ---------------------------------------------------------------- transforms

template <int N>
SpectralField<N> to_spectral(const GridField<N>& g) {
  SpectralField<N> s(g.n);
  for (int a = 0; a < N; ++a) fft_forward(g.n, g.v[a].data(), s.c[a].data());
  return s;
}

template <int N>
GridField<N> to_physical(const SpectralField<N>& s) {
  GridField<N> g(s.n);
  for (int a = 0; a < N; ++a) fft_inverse(s.n, s.c[a].data(), g.v[a].data());
  return g;
}

/// Grid values from a flat array; throws on size mismatch.
GridScalar grid_scalar(int n, std::span<const double> values);

// ------------------------------------------------------- Fourier multipliers

SpectralScalarField derivative(const SpectralScalarField& f, int dim);
SpectralVectorField gradient(const SpectralScalarField& f);
SpectralScalarField divergence(const SpectralVectorField& u);
/// Row divergence (div T)_i = d_j T_ij.
SpectralVectorField divergence(const SymTensorField& t);
SpectralVectorField curl(const SpectralVectorField& u);
/// Components of the gradient tensor d_j u_i stored at index 3*i + j.
std::array<SpectralScalarField, 9> gradient_tensor(const SpectralVectorField& u);

/// Multiplies mode k by |k|^{2 alpha}; the zero mode maps to zero.
template <int N>
SpectralField<N> fractional_laplacian(const SpectralField<N>& f, double alpha);

enum class FreqNorm { euclidean, max };

/// Keeps modes with |k| <= f.
template <int N>
SpectralField<N> low_pass(const SpectralField<N>& u, double f, FreqNorm norm = FreqNorm::euclidean);

/// Removes the Nyquist planes (used before odd-order operators).
template <int N>
void strip_nyquist(SpectralField<N>& u);

SpectralVectorField leray_project(const SpectralVectorField& u);

/// Symmetric trace-free right inverse of the divergence on mean-free fields.
/// Throws when the zero mode exceeds mean_tol times the largest coefficient.
SymTensorField inverse_divergence(const SpectralVectorField& u, double mean_tol = 1e-12);

template <int N>
std::array<double, N> mean(const SpectralField<N>& u) {
  std::array<double, N> m{};
  for (int a = 0; a < N; ++a) m[a] = u.c[a][0].real();
  return m;
}
/// Zeroes the mean and returns the removed value per component.
template <int N>
std::array<double, N> remove_mean(SpectralField<N>& u) {
  auto m = mean(u);
  for (int a = 0; a < N; ++a) u.c[a][0] = 0.0;
  return m;
}

SpectralScalarField trace(const SymTensorField& t);
SymTensorField trace_free(const SymTensorField& t);
SymTensorField times_identity(const SpectralScalarField& s);

// ------------------------------------------------------------------ products
// Quadratic terms are evaluated on a 3n/2 grid and truncated back to the
// n grid with the Nyquist planes removed, so band-limited inputs inside the
// retained band yield alias-free products.

int padded_size(int n);
template <int N>
GridField<N> to_padded(const SpectralField<N>& u);
template <int N>
SpectralField<N> from_padded(const GridField<N>& g, int n);

/// Symmetrised outer product (u_i w_j + u_j w_i)/2, trace kept.
SymTensorField sym_outer(const SpectralVectorField& u, const SpectralVectorField& w);
/// (u . grad) w.
SpectralVectorField advect(const SpectralVectorField& u, const SpectralVectorField& w);
SpectralScalarField dot(const SpectralVectorField& u, const SpectralVectorField& w);

// -------------------------------------------------------------------- norms

/// Pointwise magnitude: Euclidean for vectors, Frobenius for symmetric tensors.
template <int N>
double c0_norm(const GridField<N>& g);
template <int N>
double c0_norm(const SpectralField<N>& u) {
  return c0_norm(to_physical(u));
}
/// C0 plus the grid maximum of the Frobenius norm of the spectral gradient.
template <int N>
double c1_norm(const SpectralField<N>& u);
/// Exact L2 norm over the torus via Parseval.
template <int N>
double l2_norm(const SpectralField<N>& u);

struct HolderOptions {
  double theta = 0.5;
  std::size_t max_base_points = 8192;  ///< grid subsample size (all points if fewer)
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};
/// Estimated Hölder seminorm max |u(x)-u(y)| / d(x,y)^theta over a
/// deterministic set of pairs (lattice directions times all lags).
template <int N>
double holder_seminorm(const GridField<N>& g, const HolderOptions& opt = {});

struct NormReport {
  double c0 = 0, c1 = 0, holder = 0, l2 = 0, theta = 0.5;
};
template <int N>
NormReport field_norms(const SpectralField<N>& u, double theta = 0.5);

// ------------------------------------------------------------------ checks

double divergence_defect(const SpectralVectorField& u);  ///< max |k.u(k)| / max |u(k)|
double trace_defect(const SymTensorField& t);            ///< sup|tr| / sup|T|

}  // namespace cit
