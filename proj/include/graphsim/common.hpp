#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace graphsim {

// Setup / precondition failures.  The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runtime numerical failures (blow-up, quadrature stall).  Exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularGrid : ConfigError {
    explicit SingularGrid(const std::string& m) : ConfigError("SingularGrid: " + m) {}
};
struct DivergentNorm : ConfigError {
    explicit DivergentNorm(const std::string& m) : ConfigError("DivergentNorm: " + m) {}
};
struct NonSymmetric : ConfigError {
    explicit NonSymmetric(const std::string& m) : ConfigError("NonSymmetric: " + m) {}
};
struct NonZeroDiagonal : ConfigError {
    explicit NonZeroDiagonal(const std::string& m) : ConfigError("NonZeroDiagonal: " + m) {}
};
struct WeightExceedsOne : ConfigError {
    explicit WeightExceedsOne(const std::string& m) : ConfigError("WeightExceedsOne: " + m) {}
};
struct SupportTooLarge : ConfigError {
    explicit SupportTooLarge(const std::string& m) : ConfigError("SupportTooLarge: " + m) {}
};
struct DimensionMismatch : ConfigError {
    explicit DimensionMismatch(const std::string& m) : ConfigError("DimensionMismatch: " + m) {}
};
struct MassMismatch : ConfigError {
    explicit MassMismatch(const std::string& m) : ConfigError("MassMismatch: " + m) {}
};
struct WrongDimension : ConfigError {
    explicit WrongDimension(const std::string& m) : ConfigError("WrongDimension: " + m) {}
};
struct GridMismatch : ConfigError {
    explicit GridMismatch(const std::string& m) : ConfigError("GridMismatch: " + m) {}
};
struct KeyCollision : ConfigError {
    explicit KeyCollision(const std::string& m) : ConfigError("KeyCollision: " + m) {}
};
struct NonFiniteState : NumericalError {
    explicit NonFiniteState(const std::string& m) : NumericalError("NonFiniteState: " + m) {}
};

// Serial path is the reference implementation; the parallel path must
// reproduce it bit for bit (all kernels are keyed, no shared accumulators).
enum class ExecPolicy { Serial, Parallel };

template <class F>
inline void for_indices(int n, ExecPolicy policy, F&& body) {
    if (policy == ExecPolicy::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) body(i);
        return;
#endif
    }
    for (int i = 0; i < n; ++i) body(i);
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97f4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Compensated (Neumaier) summation over a fixed-order range; used wherever
// partial results may be produced in parallel but the reduction order matters.
inline double neumaier_sum(const double* v, std::size_t n) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = sum + v[i];
        if (std::abs(sum) >= std::abs(v[i]))
            comp += (sum - t) + v[i];
        else
            comp += (v[i] - t) + sum;
        sum = t;
    }
    return sum + comp;
}

}  // namespace graphsim
