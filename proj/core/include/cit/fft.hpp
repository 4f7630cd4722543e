#pragma once
#include <complex>

namespace cit {

/// Forward real-to-complex transform on an n^3 grid, normalized so that
/// u(x) = sum_k uhat(k) exp(i k.x). Output uses the half layout of TorusGrid.
void fft_forward(int n, const double* in, std::complex<double>* out);
/// Inverse of fft_forward; the input is not modified.
void fft_inverse(int n, const std::complex<double>* in, double* out);

}  // namespace cit
