#include "qvdp/rng.hpp"

#include <cmath>
#include <numbers>

namespace qvdp {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Tags partition the counter space by purpose.
constexpr std::uint32_t kTagJump = 0x4A000000u;
constexpr std::uint32_t kTagInitial = 0x49000000u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in (0, 1) from two words.
inline double open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return (static_cast<double>(bits & ((1ull << 53) - 1)) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<std::uint32_t, 4> NoiseStream::block(std::uint64_t step, std::uint32_t tag) const {
  const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                   static_cast<std::uint32_t>(trajectory_),
                                   tag ^ static_cast<std::uint32_t>(trajectory_ >> 32)};
  const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  return Philox4x32::generate(ctr, key);
}

void NoiseStream::normals(std::uint64_t step, std::span<double> out) const {
  // Box-Muller: one block yields two uniforms and hence two normals.
  for (std::size_t k = 0; k < out.size(); k += 2) {
    const auto w = block(step, static_cast<std::uint32_t>(k / 2));
    const double u1 = open_unit(w[0], w[1]);
    const double u2 = open_unit(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    out[k] = r * std::cos(phi);
    if (k + 1 < out.size()) out[k + 1] = r * std::sin(phi);
  }
}

double NoiseStream::uniform(std::uint64_t step) const {
  const auto w = block(step, kTagJump);
  return open_unit(w[0], w[1]);
}

double NoiseStream::initial_uniform() const {
  const auto w = block(0, kTagInitial);
  return open_unit(w[0], w[1]);
}

}  // namespace qvdp
