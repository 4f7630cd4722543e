#include "cit/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cit/error.hpp"

namespace cit {
namespace {

void put_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& os, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::ifstream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error("io", "truncated CIT3 header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

double get_f64(std::ifstream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("io", "truncated CIT3 payload");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void write_cit3(const std::filesystem::path& path, const Cit3Blob& blob) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("io", "cannot open " + path.string() + " for writing");
  os.write("CIT3", 4);
  for (auto d : blob.dims) put_u32(os, d);
  put_u32(os, blob.components);
  for (const auto& z : blob.data) {
    put_f64(os, z.real());
    put_f64(os, z.imag());
  }
  if (!os) throw Error("io", "write failed for " + path.string());
}

Cit3Blob read_cit3(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("io", "cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "CIT3", 4) != 0)
    throw Error("io", path.string() + " is not a CIT3 file");
  Cit3Blob b;
  for (auto& d : b.dims) d = get_u32(is);
  b.components = get_u32(is);
  const std::size_t count = std::size_t(b.dims[0]) * b.dims[1] * b.dims[2] * b.components;
  b.data.resize(count);
  for (auto& z : b.data) {
    const double re = get_f64(is);
    const double im = get_f64(is);
    z = cplx(re, im);
  }
  return b;
}

template <int N>
SpectralField<N> from_blob(const Cit3Blob& b) {
  const int n = static_cast<int>(b.dims[0]);
  if (b.components != N || b.dims[1] != b.dims[0] || b.dims[2] != b.dims[0] / 2 + 1)
    throw Error("io", "CIT3 shape does not match the requested field type");
  SpectralField<N> f(n);
  const std::size_t per = f.size();
  for (int a = 0; a < N; ++a)
    std::copy(b.data.begin() + a * per, b.data.begin() + (a + 1) * per, f.c[a].begin());
  return f;
}

template SpectralField<1> from_blob(const Cit3Blob&);
template SpectralField<3> from_blob(const Cit3Blob&);
template SpectralField<6> from_blob(const Cit3Blob&);

}  // namespace cit
