#pragma once

// Counter-based random numbers for reproducible parallel trajectories.

#include <array>
#include <cstdint>
#include <span>

namespace qvdp {

/// Philox4x32-10 block cipher (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key);
};

/// Deterministic noise for one trajectory. Every draw is a pure function of
/// (master seed, trajectory index, step, channel block), so results do not
/// depend on the order in which trajectories or steps are evaluated.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t trajectory_index)
      : seed_(seed), trajectory_(trajectory_index) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t trajectory_index() const { return trajectory_; }

  /// Standard normal variates for step `step`; out[k] belongs to channel k.
  void normals(std::uint64_t step, std::span<double> out) const;

  /// Uniform variate in (0, 1) for step `step` (independent of normals()).
  double uniform(std::uint64_t step) const;

  /// Uniform variate in (0, 1) drawn outside the time-step domain, for
  /// initial-condition sampling.
  double initial_uniform() const;

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t step, std::uint32_t tag) const;

  std::uint64_t seed_;
  std::uint64_t trajectory_;
};

}  // namespace qvdp
