#pragma once

#include <array>
#include <cstdint>

namespace graphsim::rng {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).  Every draw
// in the project is a pure function of (seed, domain, key, counter words), so
// results do not depend on iteration order or thread count.
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key);

// Disjoint streams for the independent sources of randomness in a run.
enum class Domain : uint32_t {
    GraphSample = 1,
    InitialCondition = 2,
    Brownian = 3,
    Points = 4,
    Dictionary = 5,
    Subsample = 6,
    Probe = 7,
};

// Uniform on (0,1), never exactly 0 or 1.
double uniform01(uint64_t seed, Domain domain, uint64_t key, uint32_t a = 0, uint32_t b = 0);

// Standard normal via Box-Muller on the two 64-bit lanes of one block.
double normal01(uint64_t seed, Domain domain, uint64_t key, uint32_t a = 0, uint32_t b = 0);

}  // namespace graphsim::rng
