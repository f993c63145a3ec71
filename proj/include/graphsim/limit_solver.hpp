#pragma once

#include <vector>

#include "graphsim/dynamics.hpp"
#include "graphsim/graphon.hpp"
#include "graphsim/measures.hpp"

namespace graphsim {

// Per-block, per-step empirical law of the limiting system: M equal-weight
// samples per block, block-constant by construction.
struct BlockLawTable {
    StepGraphon partition;  // carries block lengths and kernel values
    TimeGrid grid;
    int blocks = 0, samples = 0, dim = 1;
    std::vector<double> data;  // (steps+1) * blocks * samples * dim

    double value(int step, int block, int sample, int d) const {
        return data[((static_cast<std::size_t>(step) * blocks + block) * samples + sample) * dim + d];
    }
    double& value(int step, int block, int sample, int d) {
        return data[((static_cast<std::size_t>(step) * blocks + block) * samples + sample) * dim + d];
    }
    std::vector<double> block_mean(int step, int block) const;
    DiscreteMeasure block_law(int step, int block) const;  // mass 1, weights 1/M

    std::string serialize() const;  // "block step sample x1..xn" lines
};

struct PicardState {
    int iterations = 0;
    bool converged = false;
    std::vector<double> residuals;  // mean squared sup-gap per iteration
};

struct LimitSolveResult {
    BlockLawTable laws;
    PicardState picard;
};

// Picard iteration for the limiting SDE on a step kernel: each sweep
// integrates M paths per block against measures frozen from the previous
// iterate; the initial iterate holds the time-0 laws fixed.
LimitSolveResult solve_graphon_sde(const StepGraphon& g_n, const CoefficientModel& model,
                                   const InitialSampler& init, const TimeGrid& grid, int samples,
                                   int max_iters, double tol, const BrownianDriver& aux_driver,
                                   uint64_t aux_init_seed, ExecPolicy policy = ExecPolicy::Parallel);

// Limit trajectories at the given grid points, driven by the SAME Brownian
// keys and initial values as the finite system (synchronous coupling) but
// with measures frozen from the solved law table.
PathEnsemble coupled_limit_trajectories(const BlockLawTable& laws, const CoefficientModel& model,
                                        const std::vector<double>& initial_values,
                                        const std::vector<double>& grid_points,
                                        const TimeGrid& grid, const BrownianDriver& driver,
                                        const std::vector<NoiseKey>& keys,
                                        ExecPolicy policy = ExecPolicy::Parallel,
                                        IncrementLog* log = nullptr);

struct CouplingErrorReport {
    double value = 0.0;             // (1/N) sum_i (sup_s |X_fin - X_lim|)^order
    std::vector<double> per_step;   // (1/N) sum_i |diff_s|^order per step
};

CouplingErrorReport coupling_error(const PathEnsemble& finite, const PathEnsemble& limit,
                                   int order);

struct MeasureErrorOptions {
    int particle_cap = 0;   // 0 = every particle
    int side_cap = 256;     // atoms per side before the exact LP
    uint64_t seed = 0;
    DblOptions dbl;
};

// (1/|I|) sum_i d_BL(empirical measure of i, frozen graphon integral at x_i).
double measure_error(const InteractionGraph& graph, const std::vector<double>& states,
                     const BlockLawTable& laws, int step, const MeasureErrorOptions& opt = {});

}  // namespace graphsim
