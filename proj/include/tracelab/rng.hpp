#pragma once

#include <cstdint>

namespace tracelab {

// Counter-mode splitmix64 stream with deterministic substream derivation.
//
// Reproducibility contract: a stream is fully identified by its 64-bit key.
// Draws are mix(key + GAMMA * counter), so the k-th draw of a stream never
// depends on how sibling streams were used. Substreams are derived from the
// parent *key* only (not the counter), which makes per-(trial, input-bit)
// streams safe to hand out to parallel workers: derive(root, trial) for each
// trial, then .substream(bit) inside the channel.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) noexcept : key_(key), counter_(0) {}

  static RngStream root(std::uint64_t seed) noexcept {
    return RngStream(mix(seed ^ 0x5bf0363546d0b8f1ULL));
  }

  // Child stream `index`; independent of this stream's draw position.
  RngStream substream(std::uint64_t index) const noexcept {
    return RngStream(mix(key_ ^ mix(index + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t next_u64() noexcept {
    return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
  }

  // Uniform in [0, 1), 53 random bits.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool next_bool(double p) noexcept { return next_unit() < p; }

  std::uint64_t key() const noexcept { return key_; }

 private:
  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace tracelab
