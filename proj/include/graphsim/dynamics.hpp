#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphsim/common.hpp"
#include "graphsim/expr.hpp"
#include "graphsim/graphs.hpp"
#include "graphsim/measures.hpp"
#include "graphsim/rng.hpp"

#include <nlohmann/json_fwd.hpp>

namespace graphsim {

constexpr int kMaxDim = 8;

// Uniform time grid on [0, T].
struct TimeGrid {
    double horizon = 1.0;
    int steps = 200;
    double dt() const { return horizon / steps; }
    double time(int k) const { return horizon * k / steps; }
    bool operator==(const TimeGrid&) const = default;
};

// Noise stream identifier.  Coupled trajectories use particle keys; the limit
// solver's law-estimation paths use aux keys, a disjoint namespace.
struct NoiseKey {
    uint64_t id = 0;
    static NoiseKey particle(uint64_t i) { return {i}; }
    static NoiseKey aux(uint32_t block, uint32_t sample) {
        return {(1ULL << 63) | (static_cast<uint64_t>(block) << 32) | sample};
    }
    bool is_aux() const { return id >> 63; }
    bool operator==(const NoiseKey&) const = default;
};

// Deterministic Brownian increments keyed by (stream, step, component) with
// N(0, dt) marginals; same key always returns the same value.
class BrownianDriver {
  public:
    BrownianDriver(uint64_t seed, double dt) : seed_(seed), dt_(dt), root_(std::sqrt(dt)) {
        if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    }
    double increment(NoiseKey key, uint32_t step, uint32_t component) const {
        return root_ * rng::normal01(seed_, rng::Domain::Brownian, key.id, step, component);
    }
    double dt() const { return dt_; }
    uint64_t seed() const { return seed_; }

  private:
    uint64_t seed_;
    double dt_;
    double root_;
};

// Per-particle initial law.
struct InitialLaw {
    enum class Kind { Point, Gaussian, UniformBox };
    Kind kind = Kind::Point;
    std::vector<double> a;  // point / mean / box lower
    std::vector<double> b;  // sd (Gaussian, per component) / box upper
};

struct InitialSampler {
    int dim = 1;
    std::vector<InitialLaw> laws;  // one entry = iid, several = per-index table
    double moment_cap = 0.0;       // declared bound on E|xi|^(n+1), 0 = unstated

    const InitialLaw& law_for(uint64_t index) const {
        return laws[static_cast<std::size_t>(index % laws.size())];
    }
    void sample(uint64_t seed, uint64_t index, double* out) const;

    nlohmann::json to_json() const;
    static InitialSampler from_json(const nlohmann::json& j);
};

// Drift b(t,x,mu) and diffusion sigma(t,x,mu) with Lipschitz metadata.
struct DriftSpec {
    enum class Kind { LinearMean, Kuramoto, Expr };
    Kind kind = Kind::LinearMean;
    double a = 0.0, c = 0.0;  // linear_mean: a x + c * first moment
    double kappa = 1.0;       // kuramoto: kappa * int sin(y - x) mu(dy)
    std::vector<std::string> exprs;  // one per state component
};

struct SigmaSpec {
    enum class Kind { Constant, MeanScaled, Expr };
    Kind kind = Kind::Constant;
    double sigma0 = 0.0;  // constant; mean_scaled: sigma0 (1 + tanh(mass))
    std::vector<std::string> exprs;  // row-major n x m
};

class CoefficientModel {
  public:
    CoefficientModel() = default;
    CoefficientModel(int dim_state, int dim_noise, DriftSpec drift, SigmaSpec sigma,
                     double declared_lipschitz = 0.0);

    int dim_state() const { return n_; }
    int dim_noise() const { return m_; }
    double declared_lipschitz() const { return lip_; }
    bool measure_dependent_sigma() const;
    bool needs_trig_moments() const { return drift_.kind == DriftSpec::Kind::Kuramoto; }
    const DriftSpec& drift_spec() const { return drift_; }
    const SigmaSpec& sigma_spec() const { return sigma_; }

    void drift(double t, const double* x, const MeasureView& mu, double* out) const;
    void sigma(double t, const double* x, const MeasureView& mu, double* out) const;  // n*m

    nlohmann::json to_json() const;
    static CoefficientModel from_json(const nlohmann::json& j);

  private:
    int n_ = 1, m_ = 1;
    DriftSpec drift_;
    SigmaSpec sigma_;
    double lip_ = 0.0;
    std::vector<expr::Expression> drift_exprs_;
    std::vector<expr::Expression> sigma_exprs_;
    void fill_vars(double t, const double* x, const MeasureView& mu, double* vars) const;
};

// Interaction measure view over one sparse row, nothing materialized.
class GraphRowView final : public MeasureView {
  public:
    GraphRowView(const InteractionGraph& g, int row, const double* states, int dim)
        : g_(g), row_(row), states_(states), dim_(dim), scale_(1.0 / (g.n() * g.beta())) {}
    int dim() const override { return dim_; }
    double total_mass() const override;
    double first_moment(int component) const override;
    double sin_moment() const override;
    double cos_moment() const override;

  private:
    const InteractionGraph& g_;
    int row_;
    const double* states_;
    int dim_;
    double scale_;
};

struct PathEnsemble {
    TimeGrid grid;
    int particles = 0;
    int dim = 1;
    std::vector<double> data;  // (steps+1) * particles * dim, step-major
    std::vector<NoiseKey> keys;

    double& at(int step, int i, int d) {
        return data[(static_cast<std::size_t>(step) * particles + i) * dim + d];
    }
    double at(int step, int i, int d) const {
        return data[(static_cast<std::size_t>(step) * particles + i) * dim + d];
    }
    const double* state(int step, int i) const {
        return data.data() + (static_cast<std::size_t>(step) * particles + i) * dim;
    }
    std::vector<double> step_states(int step) const;  // particles*dim slice
};

// Optional recording of consumed Brownian increments, for coupling checks.
struct IncrementLog {
    struct Entry {
        uint64_t key;
        uint32_t step, component;
        double value;
        bool operator==(const Entry&) const = default;
    };
    std::vector<Entry> entries;
};

// Euler-Maruyama for the interacting system: one barrier per step, parallel
// over particles, interaction measures rebuilt from the previous step.
PathEnsemble simulate_particle_system(const InteractionGraph& graph, const CoefficientModel& model,
                                      const InitialSampler& init, const TimeGrid& grid,
                                      const BrownianDriver& driver, uint64_t init_seed,
                                      ExecPolicy policy = ExecPolicy::Parallel,
                                      IncrementLog* log = nullptr);

struct MomentReport {
    std::vector<double> per_step;  // (1/N) sum_i |X_s^i|^k per step
    double sup_average = 0.0;      // (1/N) sum_i sup_s |X_s^i|^k
};

MomentReport particle_moments(const PathEnsemble& ens, double k);

struct CoefficientValidation {
    double max_lipschitz_ratio = 0.0;
    double max_growth_ratio = 0.0;
    bool lipschitz_ok = true;
    bool growth_ok = true;
    int trials = 0;
};

// Monte Carlo probe of the Lipschitz/growth conditions on compactly
// supported measures; report-only.
CoefficientValidation validate_coefficients(const CoefficientModel& model, int trials,
                                            uint64_t seed = 7);

}  // namespace graphsim
