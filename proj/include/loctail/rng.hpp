#pragma once

#include <cmath>
#include <cstdint>

namespace loctail {

// SplitMix64 finalizer. Used in counter mode: the k-th output of a stream is a
// pure function of (seed, stream, k), so sampling is reproducible no matter
// how work is scheduled across threads.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class RngStream {
  public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    RngStream(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64((seed + 1) * kGolden) ^ mix64((stream + 1) * 0xD1B54A32D192ED03ull)),
          ctr_(0) {}

    std::uint64_t next_u64() { return mix64(key_ + (++ctr_) * kGolden); }

    // uniform on the open interval (0,1); never returns an exact endpoint
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    // standard normal via Box-Muller; second value of the pair is cached
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t key_;
    std::uint64_t ctr_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace loctail
