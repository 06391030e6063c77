#ifndef WNCS_RNG_HPP
#define WNCS_RNG_HPP

#include <cmath>
#include <cstdint>

namespace wncs {

// splitmix64: fast, seedable, stateless-friendly. Used everywhere so that
// trial streams derived from a master seed are reproducible across runs
// and independent of any library's distribution internals.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random stream. Each concurrent consumer owns its own
/// Stream; derive() gives decorrelated child streams from a master seed.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {
        // warm up so that small/sequential seeds diverge immediately
        splitmix64(state_);
        splitmix64(state_);
    }

    static Stream derive(std::uint64_t master_seed, std::uint64_t index) {
        std::uint64_t s = master_seed;
        std::uint64_t mixed = splitmix64(s) ^ (0x6a09e667f3bcc909ULL * (index + 1));
        return Stream(mixed);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// uniform double in (0, 1]; never returns 0 so log() is safe
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// inverse-CDF draw of Exp(rate)
    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    std::uint64_t state_;
};

} // namespace wncs

#endif
