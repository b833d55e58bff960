#ifndef DSC_RNG_HPP
#define DSC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace dsc {

/// splitmix64 step; used to derive well-mixed child seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Combines a seed with a stream tag (purpose, batch index, ...).
/// Derivation is pure, so any worker can recreate its stream independently.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (0xA0761D6478BD642Full + tag * 0xE7037ED1A0B428DBull);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b >> 1);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag1, std::uint64_t tag2) {
    return derive_seed(derive_seed(seed, tag1), tag2);
}

/// Stream tags for the independent RNG streams hanging off one master seed.
enum class Stream : std::uint64_t {
    Placement = 1,
    DesignPmf = 2,
    FactorPmf = 3,
    Evaluation = 4,
    Test = 99,
};

inline std::uint64_t derive_seed(std::uint64_t seed, Stream s, std::uint64_t index = 0) {
    return derive_seed(seed, static_cast<std::uint64_t>(s), index);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

/// Uniform double in [0,1) from the top 53 bits of the engine output.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Standard normal variates via the Marsaglia polar method.
///
/// The transform is fixed here (rather than std::normal_distribution, whose
/// algorithm is implementation-defined) so that sample streams are
/// bit-reproducible for a given seed.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01(eng_) - 1.0;
            v = 2.0 * uniform01(eng_) - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace dsc

#endif
