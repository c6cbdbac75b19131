#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace irbridge {

/// Deterministic seeded RNG with independent substreams.
///
/// Every stochastic operation takes an explicit Rng. A stream is addressed by
/// (seed, stream id); the same pair always reproduces the same draws, so
/// parallel Monte Carlo splits work into chunks with one substream per chunk
/// and results do not depend on the worker count. Gaussians come from an
/// explicit Box-Muller on top of mt19937_64, which keeps the byte stream
/// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Uniform double in [0, 1).
  double uniform();
  /// Uniform double in (0, 1].
  double uniform_pos();
  /// Standard normal draw.
  double gaussian();
  Eigen::VectorXd gaussian_vector(Eigen::Index n);

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 step; used to decorrelate (seed, stream) pairs.
std::uint64_t splitmix64(std::uint64_t& state);

/// Stream id helper: composes a module tag with a chunk/substream index.
constexpr std::uint64_t stream_id(std::uint32_t tag, std::uint32_t index) {
  return (static_cast<std::uint64_t>(tag) << 32) | index;
}

}  // namespace irbridge
