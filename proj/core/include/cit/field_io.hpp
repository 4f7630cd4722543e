#pragma once
#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cit/fields.hpp"

namespace cit {

/// Raw content of a CIT3 dump: "CIT3", three u32 dims, u32 component count,
/// then (re, im) f64 pairs per coefficient, components one after another,
/// each in row-major order of the stored half spectrum. All little endian.
struct Cit3Blob {
  std::array<std::uint32_t, 3> dims{};
  std::uint32_t components = 0;
  std::vector<cplx> data;
};

void write_cit3(const std::filesystem::path& path, const Cit3Blob& blob);
Cit3Blob read_cit3(const std::filesystem::path& path);

template <int N>
Cit3Blob to_blob(const SpectralField<N>& f) {
  Cit3Blob b;
  b.dims = {std::uint32_t(f.n), std::uint32_t(f.n), std::uint32_t(f.n / 2 + 1)};
  b.components = N;
  for (int a = 0; a < N; ++a) b.data.insert(b.data.end(), f.c[a].begin(), f.c[a].end());
  return b;
}

/// Throws when the blob does not hold N components of an n^3 field.
template <int N>
SpectralField<N> from_blob(const Cit3Blob& b);

template <int N>
void save_field(const std::filesystem::path& path, const SpectralField<N>& f) {
  write_cit3(path, to_blob(f));
}
template <int N>
SpectralField<N> load_field(const std::filesystem::path& path) {
  return from_blob<N>(read_cit3(path));
}

}  // namespace cit
