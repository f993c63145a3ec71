#include "graphsim/rng.hpp"

#include <cmath>

namespace graphsim::rng {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    lo = static_cast<uint32_t>(p);
    hi = static_cast<uint32_t>(p >> 32);
}

inline std::array<uint32_t, 4> round_once(const std::array<uint32_t, 4>& c,
                                          const std::array<uint32_t, 2>& k) {
    uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kPhiloxM0, c[0], hi0, lo0);
    mul_hi_lo(kPhiloxM1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline std::array<uint32_t, 4> block(uint64_t seed, Domain domain, uint64_t key,
                                     uint32_t a, uint32_t b) {
    std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(key),
                                   static_cast<uint32_t>(key >> 32), a, b};
    std::array<uint32_t, 2> k = {static_cast<uint32_t>(seed),
                                 static_cast<uint32_t>(seed >> 32) ^
                                     (static_cast<uint32_t>(domain) * 0x9E3779B9u)};
    return philox4x32(ctr, k);
}

// 53-bit mantissa draw mapped strictly inside (0,1).
inline double to_unit(uint32_t hi, uint32_t lo) {
    uint64_t x = (static_cast<uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(x >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

}  // namespace

std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        ctr = round_once(ctr, key);
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

double uniform01(uint64_t seed, Domain domain, uint64_t key, uint32_t a, uint32_t b) {
    auto o = block(seed, domain, key, a, b);
    return to_unit(o[0], o[1]);
}

double normal01(uint64_t seed, Domain domain, uint64_t key, uint32_t a, uint32_t b) {
    auto o = block(seed, domain, key, a, b);
    double u1 = to_unit(o[0], o[1]);
    double u2 = to_unit(o[2], o[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace graphsim::rng
