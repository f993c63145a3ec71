#include "graphsim/limit_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>

namespace graphsim {

std::vector<double> BlockLawTable::block_mean(int step, int block) const {
    std::vector<double> m(static_cast<std::size_t>(dim), 0.0);
    for (int s = 0; s < samples; ++s)
        for (int d = 0; d < dim; ++d) m[static_cast<std::size_t>(d)] += value(step, block, s, d);
    for (double& v : m) v /= samples;
    return m;
}

DiscreteMeasure BlockLawTable::block_law(int step, int block) const {
    DiscreteMeasure m;
    m.dim = dim;
    double x[kMaxDim];
    for (int s = 0; s < samples; ++s) {
        for (int d = 0; d < dim; ++d) x[d] = value(step, block, s, d);
        m.push(x, 1.0 / samples);
    }
    return m;
}

std::string BlockLawTable::serialize() const {
    std::string out;
    char buf[64];
    for (int b = 0; b < blocks; ++b)
        for (int s = 0; s <= grid.steps; ++s)
            for (int m = 0; m < samples; ++m) {
                std::snprintf(buf, sizeof buf, "%d %d %d", b, s, m);
                out += buf;
                for (int d = 0; d < dim; ++d) {
                    std::snprintf(buf, sizeof buf, " %.17g", value(s, b, m, d));
                    out += buf;
                }
                out += "\n";
            }
    return out;
}

namespace {

// Cached per-(step, block) moments of a law table iterate; the frozen
// measure nu^x needs only these to serve the coefficient models.
struct LawMoments {
    int blocks = 0, dim = 1, steps = 0;
    bool trig = false;
    std::vector<double> m1;   // (steps+1) * blocks * dim
    std::vector<double> sin_, cos_;  // (steps+1) * blocks when trig

    const double* mean(int step, int block) const {
        return m1.data() + (static_cast<std::size_t>(step) * blocks + block) * dim;
    }
};

LawMoments law_moments(const BlockLawTable& t, bool trig, ExecPolicy policy) {
    LawMoments mo;
    mo.blocks = t.blocks;
    mo.dim = t.dim;
    mo.steps = t.grid.steps;
    mo.trig = trig;
    mo.m1.assign(static_cast<std::size_t>(t.grid.steps + 1) * t.blocks * t.dim, 0.0);
    if (trig) {
        mo.sin_.assign(static_cast<std::size_t>(t.grid.steps + 1) * t.blocks, 0.0);
        mo.cos_.assign(static_cast<std::size_t>(t.grid.steps + 1) * t.blocks, 0.0);
    }
    for_indices(t.grid.steps + 1, policy, [&](int s) {
        for (int b = 0; b < t.blocks; ++b) {
            double* m1 = mo.m1.data() + (static_cast<std::size_t>(s) * t.blocks + b) * t.dim;
            double sn = 0.0, cs = 0.0;
            for (int m = 0; m < t.samples; ++m) {
                for (int d = 0; d < t.dim; ++d) m1[d] += t.value(s, b, m, d);
                if (trig) {
                    sn += std::sin(t.value(s, b, m, 0));
                    cs += std::cos(t.value(s, b, m, 0));
                }
            }
            for (int d = 0; d < t.dim; ++d) m1[d] /= t.samples;
            if (trig) {
                mo.sin_[static_cast<std::size_t>(s) * t.blocks + b] = sn / t.samples;
                mo.cos_[static_cast<std::size_t>(s) * t.blocks + b] = cs / t.samples;
            }
        }
    });
    return mo;
}

// Moments of nu^x = sum_j len_j W_bj law_j contracted once per (step, block);
// every path step then reads them in O(1).
struct NuMoments {
    int blocks = 0, dim = 1, steps = 0;
    bool trig = false;
    std::vector<double> mass;        // K, time independent
    std::vector<double> m1;          // (steps+1) * K * dim
    std::vector<double> sn, cs;      // (steps+1) * K when trig
};

NuMoments nu_moments(const StepGraphon& part, const BlockLawTable& laws, bool trig,
                     ExecPolicy policy) {
    LawMoments lm = law_moments(laws, trig, policy);
    NuMoments nu;
    nu.blocks = part.blocks();
    nu.dim = laws.dim;
    nu.steps = laws.grid.steps;
    nu.trig = trig;
    const int K = nu.blocks;
    nu.mass.assign(static_cast<std::size_t>(K), 0.0);
    for (int i = 0; i < K; ++i) {
        double acc = 0.0;
        for (int j = 0; j < K; ++j) acc += part.length(j) * part.value(i, j);
        nu.mass[static_cast<std::size_t>(i)] = acc;
    }
    nu.m1.assign(static_cast<std::size_t>(nu.steps + 1) * K * nu.dim, 0.0);
    if (trig) {
        nu.sn.assign(static_cast<std::size_t>(nu.steps + 1) * K, 0.0);
        nu.cs.assign(static_cast<std::size_t>(nu.steps + 1) * K, 0.0);
    }
    for_indices(nu.steps + 1, policy, [&](int s) {
        for (int i = 0; i < K; ++i) {
            double* out = nu.m1.data() + (static_cast<std::size_t>(s) * K + i) * nu.dim;
            for (int j = 0; j < K; ++j) {
                double w = part.length(j) * part.value(i, j);
                if (w == 0.0) continue;
                const double* mj = lm.mean(s, j);
                for (int d = 0; d < nu.dim; ++d) out[d] += w * mj[d];
                if (trig) {
                    nu.sn[static_cast<std::size_t>(s) * K + i] += w * lm.sin_[static_cast<std::size_t>(s) * K + j];
                    nu.cs[static_cast<std::size_t>(s) * K + i] += w * lm.cos_[static_cast<std::size_t>(s) * K + j];
                }
            }
        }
    });
    return nu;
}

class CachedNuView final : public MeasureView {
  public:
    CachedNuView(const NuMoments& nu, int block, int step) : nu_(nu), block_(block), step_(step) {}
    int dim() const override { return nu_.dim; }
    double total_mass() const override { return nu_.mass[static_cast<std::size_t>(block_)]; }
    double first_moment(int component) const override {
        return nu_.m1[(static_cast<std::size_t>(step_) * nu_.blocks + block_) * nu_.dim + component];
    }
    double sin_moment() const override {
        return nu_.sn[static_cast<std::size_t>(step_) * nu_.blocks + block_];
    }
    double cos_moment() const override {
        return nu_.cs[static_cast<std::size_t>(step_) * nu_.blocks + block_];
    }

  private:
    const NuMoments& nu_;
    int block_, step_;
};

}  // namespace

LimitSolveResult solve_graphon_sde(const StepGraphon& g_n, const CoefficientModel& model,
                                   const InitialSampler& init, const TimeGrid& grid, int samples,
                                   int max_iters, double tol, const BrownianDriver& aux_driver,
                                   uint64_t aux_init_seed, ExecPolicy policy) {
    if (samples < 2) throw ConfigError("need at least 2 samples per block");
    if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
    if (init.dim != model.dim_state()) throw DimensionMismatch("initial sampler dim != model dim");
    if (std::abs(aux_driver.dt() - grid.dt()) > 1e-15)
        throw GridMismatch("aux driver dt does not match the grid");

    const int K = g_n.blocks();
    const int M = samples;
    const int dim = model.dim_state();
    const int m = model.dim_noise();
    const int S = grid.steps;
    const double dt = grid.dt();
    const bool trig = model.needs_trig_moments();

    BlockLawTable cur;
    cur.partition = g_n;
    cur.grid = grid;
    cur.blocks = K;
    cur.samples = M;
    cur.dim = dim;
    cur.data.resize(static_cast<std::size_t>(S + 1) * K * M * dim);

    // initial values, fixed across iterations through aux keys
    std::vector<double> xi(static_cast<std::size_t>(K) * M * dim);
    for (int b = 0; b < K; ++b)
        for (int s = 0; s < M; ++s)
            init.sample(aux_init_seed, NoiseKey::aux(static_cast<uint32_t>(b), static_cast<uint32_t>(s)).id,
                        xi.data() + (static_cast<std::size_t>(b) * M + s) * dim);

    // iterate 0: laws frozen at their time-0 distribution
    for (int s = 0; s <= S; ++s)
        for (int b = 0; b < K; ++b)
            for (int mm = 0; mm < M; ++mm)
                for (int d = 0; d < dim; ++d)
                    cur.value(s, b, mm, d) = xi[(static_cast<std::size_t>(b) * M + mm) * dim + d];

    BlockLawTable next = cur;
    PicardState st;
    std::vector<double> gaps(static_cast<std::size_t>(K) * M, 0.0);
    std::atomic<int> bad_step{0};

    for (int it = 1; it <= max_iters; ++it) {
        NuMoments nu_tab = nu_moments(g_n, cur, trig, policy);
        for_indices(K * M, policy, [&](int idx) {
            const int b = idx / M;
            const int mm = idx % M;
            const NoiseKey key = NoiseKey::aux(static_cast<uint32_t>(b), static_cast<uint32_t>(mm));
            double x[kMaxDim];
            for (int d = 0; d < dim; ++d) {
                x[d] = xi[(static_cast<std::size_t>(b) * M + mm) * dim + d];
                next.value(0, b, mm, d) = x[d];
            }
            double sup2 = 0.0;
            for (int s = 0; s < S; ++s) {
                CachedNuView nu(nu_tab, b, s);
                double bdrift[kMaxDim], sg[kMaxDim * kMaxDim], dw[kMaxDim];
                model.drift(grid.time(s), x, nu, bdrift);
                model.sigma(grid.time(s), x, nu, sg);
                for (int c = 0; c < m; ++c)
                    dw[c] = aux_driver.increment(key, static_cast<uint32_t>(s), static_cast<uint32_t>(c));
                double gap2 = 0.0;
                bool ok = true;
                for (int d = 0; d < dim; ++d) {
                    double v = x[d] + bdrift[d] * dt;
                    for (int c = 0; c < m; ++c) v += sg[d * m + c] * dw[c];
                    ok = ok && std::isfinite(v);
                    x[d] = v;
                    next.value(s + 1, b, mm, d) = v;
                    double diff = v - cur.value(s + 1, b, mm, d);
                    gap2 += diff * diff;
                }
                if (!ok) {
                    bad_step.store(s + 1, std::memory_order_relaxed);
                    break;
                }
                sup2 = std::max(sup2, gap2);
            }
            gaps[static_cast<std::size_t>(idx)] = sup2;
        });
        if (bad_step.load() > 0)
            throw NonFiniteState("limit path blew up at step " + std::to_string(bad_step.load()));
        double residual = neumaier_sum(gaps.data(), gaps.size()) / (static_cast<double>(K) * M);
        st.residuals.push_back(residual);
        st.iterations = it;
        std::swap(cur.data, next.data);
        if (residual < tol) {
            st.converged = true;
            break;
        }
    }
    return {std::move(cur), std::move(st)};
}

PathEnsemble coupled_limit_trajectories(const BlockLawTable& laws, const CoefficientModel& model,
                                        const std::vector<double>& initial_values,
                                        const std::vector<double>& grid_points,
                                        const TimeGrid& grid, const BrownianDriver& driver,
                                        const std::vector<NoiseKey>& keys, ExecPolicy policy,
                                        IncrementLog* log) {
    if (!(laws.grid == grid)) throw GridMismatch("law table solved on a different time grid");
    if (std::abs(driver.dt() - grid.dt()) > 1e-15) throw GridMismatch("driver dt != grid dt");
    const int n = static_cast<int>(grid_points.size());
    const int dim = model.dim_state();
    const int m = model.dim_noise();
    if (static_cast<int>(initial_values.size()) != n * dim)
        throw DimensionMismatch("initial values must hold N*dim entries");
    if (static_cast<int>(keys.size()) != n) throw DimensionMismatch("one noise key per particle");
    for (const NoiseKey& k : keys)
        if (k.is_aux()) throw KeyCollision("coupled trajectories must not reuse aux noise keys");

    NuMoments nu_tab = nu_moments(laws.partition, laws, model.needs_trig_moments(), policy);

    PathEnsemble ens;
    ens.grid = grid;
    ens.particles = n;
    ens.dim = dim;
    ens.keys = keys;
    ens.data.resize(static_cast<std::size_t>(grid.steps + 1) * n * dim);
    std::copy(initial_values.begin(), initial_values.end(), ens.data.begin());

    const double dt = grid.dt();
    std::atomic<int> bad_step{0};
    for_indices(n, policy, [&](int i) {
        const int block = laws.partition.block_of(grid_points[static_cast<std::size_t>(i)]);
        double x[kMaxDim];
        for (int d = 0; d < dim; ++d) x[d] = ens.at(0, i, d);
        for (int s = 0; s < grid.steps; ++s) {
            CachedNuView nu(nu_tab, block, s);
            double b[kMaxDim], sg[kMaxDim * kMaxDim], dw[kMaxDim];
            model.drift(grid.time(s), x, nu, b);
            model.sigma(grid.time(s), x, nu, sg);
            for (int c = 0; c < m; ++c)
                dw[c] = driver.increment(keys[static_cast<std::size_t>(i)], static_cast<uint32_t>(s),
                                         static_cast<uint32_t>(c));
            bool ok = true;
            for (int d = 0; d < dim; ++d) {
                double v = x[d] + b[d] * dt;
                for (int c = 0; c < m; ++c) v += sg[d * m + c] * dw[c];
                ok = ok && std::isfinite(v);
                x[d] = v;
                ens.at(s + 1, i, d) = v;
            }
            if (!ok) {
                bad_step.store(s + 1, std::memory_order_relaxed);
                break;
            }
        }
    });
    if (bad_step.load() > 0)
        throw NonFiniteState("coupled limit path blew up at step " + std::to_string(bad_step.load()));
    if (log)
        for (int i = 0; i < n; ++i)
            for (int s = 0; s < grid.steps; ++s)
                for (int c = 0; c < m; ++c)
                    log->entries.push_back({keys[static_cast<std::size_t>(i)].id, static_cast<uint32_t>(s),
                                            static_cast<uint32_t>(c),
                                            driver.increment(keys[static_cast<std::size_t>(i)],
                                                             static_cast<uint32_t>(s), static_cast<uint32_t>(c))});
    return ens;
}

CouplingErrorReport coupling_error(const PathEnsemble& finite, const PathEnsemble& limit,
                                   int order) {
    if (order != 1 && order != 2) throw ConfigError("coupling error order must be 1 or 2");
    if (finite.particles != limit.particles || finite.dim != limit.dim ||
        !(finite.grid == limit.grid))
        throw DimensionMismatch("ensembles do not match");
    const int n = finite.particles;
    CouplingErrorReport rep;
    rep.per_step.resize(static_cast<std::size_t>(finite.grid.steps) + 1, 0.0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double sup = 0.0;
        for (int s = 0; s <= finite.grid.steps; ++s) {
            double d2 = 0.0;
            for (int d = 0; d < finite.dim; ++d) {
                double diff = finite.at(s, i, d) - limit.at(s, i, d);
                d2 += diff * diff;
            }
            double norm = std::sqrt(d2);
            sup = std::max(sup, norm);
            rep.per_step[static_cast<std::size_t>(s)] += (order == 1 ? norm : d2) / n;
        }
        acc += order == 1 ? sup : sup * sup;
    }
    rep.value = acc / n;
    return rep;
}

double measure_error(const InteractionGraph& graph, const std::vector<double>& states,
                     const BlockLawTable& laws, int step, const MeasureErrorOptions& opt) {
    const int n = graph.n();
    const int dim = laws.dim;
    if (static_cast<int>(states.size()) != n * dim)
        throw DimensionMismatch("states must hold N*dim entries");
    GridSpec grid{n};

    std::vector<DiscreteMeasure> block_laws;
    block_laws.reserve(static_cast<std::size_t>(laws.blocks));
    for (int b = 0; b < laws.blocks; ++b) block_laws.push_back(laws.block_law(step, b));

    std::vector<int> idx;
    if (opt.particle_cap > 0 && opt.particle_cap < n) {
        // fixed-seed subset of particles, sorted for reproducibility
        std::vector<std::pair<double, int>> keys(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            keys[static_cast<std::size_t>(i)] = {
                rng::uniform01(opt.seed, rng::Domain::Subsample, 0xFEED, static_cast<uint32_t>(i),
                               static_cast<uint32_t>(step)),
                i};
        std::partial_sort(keys.begin(), keys.begin() + opt.particle_cap, keys.end());
        for (int k = 0; k < opt.particle_cap; ++k) idx.push_back(keys[static_cast<std::size_t>(k)].second);
        std::sort(idx.begin(), idx.end());
    } else {
        idx.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    }

    double acc = 0.0;
    for (int i : idx) {
        DiscreteMeasure emp = weighted_empirical(graph, i, states, dim);
        DiscreteMeasure mix =
            graphon_integral_measure(laws.partition, grid.point(i), block_laws);
        emp = subsample_measure(emp, opt.side_cap, opt.seed, (static_cast<uint64_t>(i) << 20) | 1u);
        mix = subsample_measure(mix, opt.side_cap, opt.seed, (static_cast<uint64_t>(i) << 20) | 2u);
        acc += dbl_exact(emp, mix, opt.dbl);
    }
    return acc / static_cast<double>(idx.size());
}

}  // namespace graphsim
