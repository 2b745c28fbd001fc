#pragma once

#include <cmath>
#include <cstdint>

namespace frag {

// SplitMix64 finalizer. Every stream derivation in the library goes through
// this one mixer, so a documented master seed reproduces the whole run.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Child stream seed; injective in `tag` for a fixed `seed`.
constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag) noexcept {
  return mix64(seed ^ mix64(tag));
}

// Stream tags. Fragment child indices occupy the small integers, so the
// named tags live far above any realistic child count.
inline constexpr std::uint64_t kTagReplica = 0x5245504c49434154ull;
inline constexpr std::uint64_t kTagLine = 0x4c494e4553454544ull;
inline constexpr std::uint64_t kTagRootFragment = 0x524f4f5446524147ull;
inline constexpr std::uint64_t kTagFragmentStream = 0x4652414753545254ull;
inline constexpr std::uint64_t kTagOvershoot = 0x4f56455253484f54ull;
inline constexpr std::uint64_t kTagTaggedPath = 0x5441474745445054ull;
inline constexpr std::uint64_t kTagPopulation = 0x504f50554c415445ull;

// Counter-based uniform stream (SplitMix64). Distinct seeds give streams that
// are independent for Monte Carlo purposes regardless of evaluation order, so
// per-fragment streams keyed by path id make refinement pathwise coupled and
// thread-count independent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double next_double() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe to pass through log().
  double next_double_pos() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double exponential(double rate) noexcept {
    return -std::log(next_double_pos()) / rate;
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t replica) noexcept {
  return derive_stream(derive_stream(master_seed, replica), kTagReplica);
}

}  // namespace frag
