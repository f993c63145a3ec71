#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphsim/dynamics.hpp"
#include "graphsim/graphon.hpp"
#include "graphsim/graphs.hpp"
#include "graphsim/limit_solver.hpp"
#include "graphsim/report.hpp"

#include <nlohmann/json_fwd.hpp>

namespace graphsim {

enum class ExperimentKind { Simulate, Limit, Converge, Rate, Stability, Wlln, Moments };

std::string to_string(ExperimentKind k);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Converge;
    Graphon graphon = Graphon::constant(1.0);
    SparsitySchedule schedule;
    GraphMode mode = GraphMode::SymmetricSimple;
    bool sample_from_discretized = false;  // Bernoulli(beta g_N) instead of Bernoulli(beta g)
    SingularPolicy singular_policy = SingularPolicy::Auto;
    std::vector<int> ns = {64};
    int samples_per_block = 64;   // M
    int samples_factor = 0;       // when > 0, M = factor * N
    int blocks = 32;              // K for the law table
    TimeGrid grid;
    CoefficientModel model;
    InitialSampler init;
    int seed_count = 20;
    uint64_t seed_base = 1;
    int picard_max_iters = 25;
    double picard_tol = 1e-6;
    bool record_measure_error = true;
    MeasureErrorOptions dbl_opts{16, 128, 0, {}};
    std::vector<double> stability_eps = {0.05, 0.1, 0.2};
    std::vector<double> eta_grid = {0.05, 0.1, 0.2};
    std::string out_dir;
    int threads = 0;  // 0 = library default
    int thin = 1;     // trajectory output thinning

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    void validate() const;
    std::string canonical_text() const;  // sorted-key dump used for hashing
};

// Outcome of one (N, seed) cell of a convergence sweep.
struct SeedOutcome {
    double err_l1 = 0.0, err_l2 = 0.0, err_dbl = 0.0;
    double moment2 = 0.0;
    std::vector<double> err_l1_at_times, err_dbl_at_times;
};

SeedOutcome run_convergence_cell(const ExperimentConfig& cfg, int n, uint64_t seed);

ConvergenceReport run_convergence(const ExperimentConfig& cfg);

RateFit estimate_rate(const ConvergenceReport& report, int state_dim);

struct StabilityRow {
    double eps = 0.0;
    double dist2 = 0.0;  // ||g - h||_2
    double gap = 0.0;    // block-coupled mean-square sup gap
    double ratio = 0.0;  // gap / dist2^2
};

struct StabilityReport {
    std::vector<StabilityRow> rows;
};

StabilityReport run_stability(const ExperimentConfig& cfg);

struct WllnRow {
    int n = 0;
    double beta = 0.0;
    int seeds = 0;
    double mean_gap = 0.0, gap_se = 0.0;
    std::vector<double> exceedance;  // fraction of seeds with gap > eta, per eta
    double mean_dbl = 0.0, dbl_se = 0.0;  // empirical measure vs law mixture
};

struct WllnReport {
    std::vector<double> eta_grid;
    std::vector<WllnRow> rows;
};

WllnReport run_wlln(const ExperimentConfig& cfg);

// Writes report.csv, meta.json and plot.svg.  meta.json carries the full
// config, the seeds, and the recorded timings; re-running from it reproduces
// report.csv byte for byte.
void emit_report(const ConvergenceReport& report, const ExperimentConfig& cfg,
                 const std::string& dir);

// Reads meta.json (or a bare config) and re-creates the config plus any
// recorded wall times to carry into the replayed CSV.
struct ReplaySpec {
    ExperimentConfig config;
    std::vector<long> recorded_wall_ms;
};

ReplaySpec load_config_or_meta(const std::string& path);

}  // namespace graphsim
