#include "igsf/rng.hpp"

#include <cmath>
#include <numbers>

#include "igsf/errors.hpp"

namespace igsf {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer; a 64-bit permutation with good avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) {
  const std::uint64_t a = mix64(seed + kGolden);
  const std::uint64_t b = mix64(stream_id + 0xd1b54a32d192ed03ULL);
  key_ = mix64(a ^ (b * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL));
}

std::uint64_t RngStream::next_u64() {
  // SplitMix64 sequence anchored at a per-stream key.
  return mix64(key_ + (++counter_) * kGolden);
}

double RngStream::uniform() {
  // 53 random bits, offset by half an ulp so that 0 and 1 are excluded.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd RngStream::normals(int n) {
  if (n < 0) throw ParameterError("RngStream::normals: negative count");
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = normal();
  return out;
}

std::uint64_t stream_tag(std::string_view tag) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace igsf
