#pragma once

// Flat little-endian binary cache for generated materials.
//
//   offset  size  field
//   0       4     magic "WMCX"
//   4       4     version (u32, currently 1)
//   8       8     generator seed (u64)
//   16      12    n_nuclides, n_gridpoints, n_channels (u32 each)
//   28      ...   per nuclide: energies[n_gridpoints] f32, xs[n_gridpoints*n_channels] f32
//   ...     ...   densities[n_nuclides] f32

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "wsmc/error.hpp"
#include "wsmc/xsdata.hpp"

namespace wsmc {

inline constexpr std::array<char, 4> kWmcxMagic{'W', 'M', 'C', 'X'};
inline constexpr std::uint32_t kWmcxVersion = 1;
inline constexpr std::size_t kWmcxHeaderBytes = 16;
inline constexpr std::size_t kWmcxCountBytes = 12;

inline std::size_t wmcx_file_size(std::size_t n_nuclides, std::size_t n_gridpoints, std::size_t n_channels) {
  return kWmcxHeaderBytes + kWmcxCountBytes +
         n_nuclides * n_gridpoints * (1 + n_channels) * kBytesPerValue + n_nuclides * kBytesPerValue;
}

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(value >> (8 * i)));
}

inline void put_f32(std::vector<unsigned char>& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return value;
  }

  float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorKind::format, "WMCX stream truncated");
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> serialize_material(const Material& m, std::uint64_t seed) {
  validate(m);
  const std::size_t n_points = m.n_gridpoints();
  const std::size_t n_channels = m.n_channels();
  for (const auto& g : m.nuclides) {
    if (g.n_gridpoints() != n_points || g.n_channels != n_channels)
      throw Error(ErrorKind::invalid_configuration, "WMCX requires a uniform nuclide shape");
  }
  std::vector<unsigned char> out;
  out.reserve(wmcx_file_size(m.n_nuclides(), n_points, n_channels));
  out.insert(out.end(), kWmcxMagic.begin(), kWmcxMagic.end());
  detail::put_le(out, kWmcxVersion);
  detail::put_le(out, seed);
  detail::put_le(out, static_cast<std::uint32_t>(m.n_nuclides()));
  detail::put_le(out, static_cast<std::uint32_t>(n_points));
  detail::put_le(out, static_cast<std::uint32_t>(n_channels));
  for (const auto& g : m.nuclides) {
    for (float e : g.energies) detail::put_f32(out, e);
    for (float v : g.xs) detail::put_f32(out, v);
  }
  for (float d : m.densities) detail::put_f32(out, d);
  return out;
}

struct LoadedMaterial {
  Material material;
  std::uint64_t seed = 0;
};

inline LoadedMaterial deserialize_material(std::span<const unsigned char> bytes) {
  detail::ByteReader in(bytes);
  in.need(kWmcxMagic.size());
  for (char c : kWmcxMagic) {
    if (static_cast<char>(in.get<std::uint8_t>()) != c) throw Error(ErrorKind::format, "bad WMCX magic");
  }
  if (const auto version = in.get<std::uint32_t>(); version != kWmcxVersion)
    throw Error(ErrorKind::format, "unsupported WMCX version " + std::to_string(version));

  LoadedMaterial out;
  out.seed = in.get<std::uint64_t>();
  const std::size_t n_nuclides = in.get<std::uint32_t>();
  const std::size_t n_points = in.get<std::uint32_t>();
  const std::size_t n_channels = in.get<std::uint32_t>();
  if (n_nuclides == 0 || n_points < 2 || n_channels == 0)
    throw Error(ErrorKind::format, "WMCX counts describe an invalid material");
  const std::size_t payload = wmcx_file_size(n_nuclides, n_points, n_channels) - kWmcxHeaderBytes - kWmcxCountBytes;
  if (in.remaining() != payload)
    throw Error(ErrorKind::format, "WMCX payload is " + std::to_string(in.remaining()) + " bytes, expected " +
                                       std::to_string(payload));

  auto& m = out.material;
  m.nuclides.resize(n_nuclides);
  for (auto& g : m.nuclides) {
    g.n_channels = n_channels;
    g.energies.resize(n_points);
    g.xs.resize(n_points * n_channels);
    for (auto& e : g.energies) e = in.get_f32();
    for (auto& v : g.xs) v = in.get_f32();
  }
  m.densities.resize(n_nuclides);
  for (auto& d : m.densities) d = in.get_f32();
  try {
    validate(m);
  } catch (const Error& e) {
    throw Error(ErrorKind::format, std::string("WMCX content invalid: ") + e.what());
  }
  return out;
}

inline void save_material(const std::filesystem::path& path, const Material& m, std::uint64_t seed) {
  const auto bytes = serialize_material(m, seed);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(ErrorKind::io, "write failed for " + path.string());
}

inline LoadedMaterial load_material(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_material(bytes);
}

}  // namespace wsmc
