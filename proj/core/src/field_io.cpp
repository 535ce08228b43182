#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "lagflow/error.hpp"
#include "lagflow/fields.hpp"

namespace lagflow {

namespace {

constexpr std::array<char, 5> kMagic = {'L', 'A', 'G', 'F', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  std::array<unsigned char, 8> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), 8))
    throw IoError(path + ": truncated LAGF1 file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& is, const std::string& path) {
  return std::bit_cast<double>(get_u64(is, path));
}

}  // namespace

GridSamples read_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open field file " + path);
  std::array<char, 5> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw IoError(path + ": bad magic, expected LAGF1");
  GridSamples s;
  const std::uint64_t d = get_u64(in, path);
  if (d < 1 || d > static_cast<std::uint64_t>(kMaxDim))
    throw IoError(path + ": unsupported dimension " + std::to_string(d));
  s.dim = static_cast<int>(d);
  for (std::uint64_t a = 0; a < d; ++a) {
    const std::uint64_t n = get_u64(in, path);
    if (n < 1 || n > (1u << 20)) throw IoError(path + ": bad resolution");
    s.n_x.push_back(static_cast<std::int64_t>(n));
  }
  const std::uint64_t nt = get_u64(in, path);
  if (nt < 1 || nt > (1u << 20)) throw IoError(path + ": bad N_t");
  s.n_t = static_cast<std::int64_t>(nt);
  s.horizon = get_f64(in, path);
  if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) throw IoError(path + ": bad horizon T");
  s.values.resize(s.expected_size());
  for (double& v : s.values) v = get_f64(in, path);
  if (in.peek() != std::char_traits<char>::eof()) throw IoError(path + ": trailing bytes");
  return s;
}

void write_field_file(const std::string& path, const GridSamples& s) {
  if (s.values.size() != s.expected_size() || static_cast<int>(s.n_x.size()) != s.dim)
    throw InvalidInput("write_field_file: inconsistent sample grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write field file " + path);
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, static_cast<std::uint64_t>(s.dim));
  for (auto n : s.n_x) put_u64(out, static_cast<std::uint64_t>(n));
  put_u64(out, static_cast<std::uint64_t>(s.n_t));
  put_f64(out, s.horizon);
  for (double v : s.values) put_f64(out, v);
  if (!out) throw IoError("short write to " + path);
}

VelocityField load_field_file(const std::string& path, FieldMetadata meta) {
  return VelocityField::from_samples(path, read_field_file(path), meta);
}

}  // namespace lagflow
