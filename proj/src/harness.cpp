#include "graphsim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace graphsim {

using nlohmann::json;

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Simulate: return "simulate";
        case ExperimentKind::Limit: return "limit";
        case ExperimentKind::Converge: return "converge";
        case ExperimentKind::Rate: return "rate";
        case ExperimentKind::Stability: return "stability";
        case ExperimentKind::Wlln: return "wlln";
        case ExperimentKind::Moments: return "moments";
    }
    return "converge";
}

namespace {

ExperimentKind kind_from_string(const std::string& s) {
    if (s == "simulate") return ExperimentKind::Simulate;
    if (s == "limit") return ExperimentKind::Limit;
    if (s == "converge") return ExperimentKind::Converge;
    if (s == "rate") return ExperimentKind::Rate;
    if (s == "stability") return ExperimentKind::Stability;
    if (s == "wlln") return ExperimentKind::Wlln;
    if (s == "moments") return ExperimentKind::Moments;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

std::string policy_name(SingularPolicy p) {
    switch (p) {
        case SingularPolicy::Auto: return "auto";
        case SingularPolicy::Reject: return "reject";
        case SingularPolicy::MidpointShift: return "midpoint-shift";
        case SingularPolicy::Clamp: return "clamp";
    }
    return "auto";
}

SingularPolicy policy_from_string(const std::string& s) {
    if (s == "auto") return SingularPolicy::Auto;
    if (s == "reject") return SingularPolicy::Reject;
    if (s == "midpoint-shift") return SingularPolicy::MidpointShift;
    if (s == "clamp") return SingularPolicy::Clamp;
    throw ConfigError("unknown singular policy '" + s + "'");
}

struct MeanSe {
    double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe r;
    if (v.empty()) return r;
    r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.se = std::sqrt(ss / (static_cast<double>(v.size()) - 1.0) / static_cast<double>(v.size()));
    }
    return r;
}

std::vector<int> checkpoints(int steps) {
    // t = T and four interior times
    std::vector<int> cp;
    for (int k = 1; k <= 5; ++k) cp.push_back(steps * k / 5);
    return cp;
}

uint64_t sub_seed(uint64_t seed, uint64_t stream) { return splitmix64(seed * 8 + stream); }

}  // namespace

json ExperimentConfig::to_json() const {
    json j;
    j["kind"] = graphsim::to_string(kind);
    j["graphon"] = graphon.to_json();
    j["schedule"] = schedule.to_json();
    j["graph_mode"] = graphsim::to_string(mode);
    j["sample_from_discretized"] = sample_from_discretized;
    j["singular_policy"] = policy_name(singular_policy);
    j["N"] = ns;
    j["M"] = samples_per_block;
    j["M_factor"] = samples_factor;
    j["blocks"] = blocks;
    j["grid"] = {{"T", grid.horizon}, {"steps", grid.steps}};
    j["model"] = model.to_json();
    j["init"] = init.to_json();
    j["seeds"] = {{"count", seed_count}, {"base", seed_base}};
    j["picard"] = {{"max_iters", picard_max_iters}, {"tol", picard_tol}};
    j["measure_error"] = {{"enabled", record_measure_error},
                          {"particle_cap", dbl_opts.particle_cap},
                          {"side_cap", dbl_opts.side_cap},
                          {"max_support", dbl_opts.dbl.max_support}};
    j["stability_eps"] = stability_eps;
    j["eta_grid"] = eta_grid;
    j["out"] = out_dir;
    j["threads"] = threads;
    j["thin"] = thin;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.kind = kind_from_string(j.value("kind", "converge"));
    if (j.contains("graphon")) c.graphon = Graphon::from_json(j.at("graphon"));
    if (j.contains("schedule")) c.schedule = SparsitySchedule::from_json(j.at("schedule"));
    c.mode = graph_mode_from_string(j.value("graph_mode", "symmetric"));
    c.sample_from_discretized = j.value("sample_from_discretized", false);
    c.singular_policy = policy_from_string(j.value("singular_policy", "auto"));
    if (j.contains("N")) {
        if (j["N"].is_number())
            c.ns = {j["N"].get<int>()};
        else
            c.ns = j["N"].get<std::vector<int>>();
    }
    std::sort(c.ns.begin(), c.ns.end());
    c.ns.erase(std::unique(c.ns.begin(), c.ns.end()), c.ns.end());
    c.samples_per_block = j.value("M", 64);
    c.samples_factor = j.value("M_factor", 0);
    c.blocks = j.value("blocks", 32);
    if (j.contains("grid")) {
        c.grid.horizon = j["grid"].value("T", 1.0);
        c.grid.steps = j["grid"].value("steps", 200);
    }
    if (j.contains("model")) c.model = CoefficientModel::from_json(j.at("model"));
    if (j.contains("init")) c.init = InitialSampler::from_json(j.at("init"));
    if (j.contains("seeds")) {
        c.seed_count = j["seeds"].value("count", 20);
        c.seed_base = j["seeds"].value("base", static_cast<uint64_t>(1));
    }
    if (j.contains("picard")) {
        c.picard_max_iters = j["picard"].value("max_iters", 25);
        c.picard_tol = j["picard"].value("tol", 1e-6);
    }
    if (j.contains("measure_error")) {
        c.record_measure_error = j["measure_error"].value("enabled", true);
        c.dbl_opts.particle_cap = j["measure_error"].value("particle_cap", 16);
        c.dbl_opts.side_cap = j["measure_error"].value("side_cap", 128);
        c.dbl_opts.dbl.max_support = j["measure_error"].value("max_support", 512);
    }
    if (j.contains("stability_eps")) c.stability_eps = j["stability_eps"].get<std::vector<double>>();
    if (j.contains("eta_grid")) c.eta_grid = j["eta_grid"].get<std::vector<double>>();
    c.out_dir = j.value("out", "");
    c.threads = j.value("threads", 0);
    c.thin = j.value("thin", 1);
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    if (ns.empty()) throw ConfigError("config needs at least one N");
    for (int n : ns) {
        if (n < 2) throw ConfigError("N must be at least 2");
        double b = schedule.beta(n);
        if (!(b > 0.0) || !(b <= 1.0))
            throw ConfigError("beta_N = " + std::to_string(b) + " outside (0,1] at N = " + std::to_string(n));
        if (b < 1e-9) throw ConfigError("degenerate beta_N below 1e-9 at N = " + std::to_string(n));
    }
    if (samples_factor == 0 && samples_per_block < 2) throw ConfigError("M must be >= 2");
    if (samples_factor < 0) throw ConfigError("M_factor must be >= 0");
    if (blocks < 1) throw ConfigError("blocks must be >= 1");
    if (seed_count < 1) throw ConfigError("need at least one seed");
    if (!(grid.horizon > 0.0) || grid.steps < 1) throw ConfigError("bad time grid");
    if (thin < 1) throw ConfigError("thin must be >= 1");
    if (model.measure_dependent_sigma() && !schedule.diverging_degree_sq())
        throw ConfigError("measure-dependent sigma requires N beta_N^2 -> infinity (schedule too sparse)");
    bool needs_divergence = kind == ExperimentKind::Converge || kind == ExperimentKind::Rate ||
                            kind == ExperimentKind::Wlln || kind == ExperimentKind::Moments;
    if (needs_divergence && !schedule.diverging_degree())
        throw ConfigError("experiment requires the diverging-degree regime N beta_N -> infinity");
    if ((kind == ExperimentKind::Rate || kind == ExperimentKind::Wlln) && !graphon.is_lipschitz())
        throw ConfigError(graphsim::to_string(kind) + " experiments require a Lipschitz-flagged graphon");
}

std::string ExperimentConfig::canonical_text() const { return to_json().dump(); }

SeedOutcome run_convergence_cell(const ExperimentConfig& cfg, int n, uint64_t seed) {
    const double beta = cfg.schedule.beta(n);
    const uint64_t graph_seed = sub_seed(seed, 1);
    const uint64_t init_seed = sub_seed(seed, 2);
    const uint64_t bm_seed = sub_seed(seed, 3);
    const uint64_t aux_init_seed = sub_seed(seed, 4);

    InteractionGraph graph;
    if (cfg.mode == GraphMode::Deterministic) {
        graph = deterministic_graph(discretize(cfg.graphon, GridSpec{n}, cfg.singular_policy), n, beta);
    } else if (cfg.sample_from_discretized) {
        Graphon gn = Graphon::step(discretize(cfg.graphon, GridSpec{n}, cfg.singular_policy));
        graph = sample_w_random(gn, n, beta, cfg.mode, graph_seed);
    } else {
        graph = sample_w_random(cfg.graphon, n, beta, cfg.mode, graph_seed);
    }

    BrownianDriver driver(bm_seed, cfg.grid.dt());
    PathEnsemble finite = simulate_particle_system(graph, cfg.model, cfg.init, cfg.grid, driver,
                                                   init_seed, ExecPolicy::Serial);

    const int m_samples = cfg.samples_factor > 0 ? cfg.samples_factor * n : cfg.samples_per_block;
    StepGraphon g_k = discretize(cfg.graphon, GridSpec{cfg.blocks}, cfg.singular_policy);
    LimitSolveResult limit = solve_graphon_sde(g_k, cfg.model, cfg.init, cfg.grid, m_samples,
                                               cfg.picard_max_iters, cfg.picard_tol, driver,
                                               aux_init_seed, ExecPolicy::Serial);

    GridSpec grid_n{n};
    std::vector<double> points(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) points[static_cast<std::size_t>(i)] = grid_n.point(i);
    PathEnsemble coupled = coupled_limit_trajectories(limit.laws, cfg.model, finite.step_states(0),
                                                      points, cfg.grid, driver, finite.keys,
                                                      ExecPolicy::Serial);

    SeedOutcome out;
    CouplingErrorReport e1 = coupling_error(finite, coupled, 1);
    CouplingErrorReport e2 = coupling_error(finite, coupled, 2);
    out.err_l1 = e1.value;
    out.err_l2 = e2.value;
    out.moment2 = particle_moments(finite, 2).sup_average;
    for (int cp : checkpoints(cfg.grid.steps))
        out.err_l1_at_times.push_back(e1.per_step[static_cast<std::size_t>(cp)]);
    if (cfg.record_measure_error) {
        MeasureErrorOptions opt = cfg.dbl_opts;
        opt.seed = seed;
        for (int cp : checkpoints(cfg.grid.steps)) {
            double v = measure_error(graph, finite.step_states(cp), limit.laws, cp, opt);
            out.err_dbl_at_times.push_back(v);
        }
        out.err_dbl = out.err_dbl_at_times.back();
    }
    return out;
}

namespace {

// Seeds are independent jobs; exceptions are collected and rethrown after
// the pool drains so OpenMP regions never unwind.
template <class F>
void run_seed_pool(int count, F&& job) {
    std::vector<std::string> errors(static_cast<std::size_t>(count));
    std::vector<char> numerical(static_cast<std::size_t>(count), 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int s = 0; s < count; ++s) {
        try {
            job(s);
        } catch (const NumericalError& e) {
            errors[static_cast<std::size_t>(s)] = e.what();
            numerical[static_cast<std::size_t>(s)] = 1;
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(s)] = e.what();
        }
    }
    for (int s = 0; s < count; ++s)
        if (!errors[static_cast<std::size_t>(s)].empty()) {
            if (numerical[static_cast<std::size_t>(s)]) throw NumericalError(errors[static_cast<std::size_t>(s)]);
            throw ConfigError(errors[static_cast<std::size_t>(s)]);
        }
}

}  // namespace

ConvergenceReport run_convergence(const ExperimentConfig& cfg) {
    cfg.validate();
    ConvergenceReport rep;
    for (int n : cfg.ns) {
        auto t0 = std::chrono::steady_clock::now();
        std::vector<SeedOutcome> outcomes(static_cast<std::size_t>(cfg.seed_count));
        run_seed_pool(cfg.seed_count, [&](int s) {
            outcomes[static_cast<std::size_t>(s)] =
                run_convergence_cell(cfg, n, cfg.seed_base + static_cast<uint64_t>(s));
        });
        auto t1 = std::chrono::steady_clock::now();

        ReportRow row;
        row.n = n;
        row.beta = cfg.schedule.beta(n);
        row.n_beta = n * row.beta;
        row.seeds = cfg.seed_count;
        std::vector<double> l1, l2, dbl, mom;
        for (const SeedOutcome& o : outcomes) {
            l1.push_back(o.err_l1);
            l2.push_back(o.err_l2);
            dbl.push_back(o.err_dbl);
            mom.push_back(o.moment2);
        }
        MeanSe a = mean_se(l1), b = mean_se(l2), c = mean_se(dbl), d = mean_se(mom);
        row.err_l1 = a.mean;
        row.err_l1_se = a.se;
        row.err_l2 = b.mean;
        row.err_l2_se = b.se;
        row.err_dbl = c.mean;
        row.err_dbl_se = c.se;
        row.moment2 = d.mean;
        std::size_t cps = outcomes.empty() ? 0 : outcomes[0].err_l1_at_times.size();
        row.err_l1_at_times.assign(cps, 0.0);
        for (const SeedOutcome& o : outcomes)
            for (std::size_t k = 0; k < cps; ++k)
                row.err_l1_at_times[k] += o.err_l1_at_times[k] / cfg.seed_count;
        cps = outcomes.empty() ? 0 : outcomes[0].err_dbl_at_times.size();
        row.err_dbl_at_times.assign(cps, 0.0);
        for (const SeedOutcome& o : outcomes)
            for (std::size_t k = 0; k < cps; ++k)
                row.err_dbl_at_times[k] += o.err_dbl_at_times[k] / cfg.seed_count;
        row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        rep.rows.push_back(std::move(row));

        if (!cfg.out_dir.empty()) {  // partial results flushed per row
            std::filesystem::create_directories(cfg.out_dir);
            std::ofstream f(cfg.out_dir + "/report.csv", std::ios::trunc);
            f << report_to_csv(rep);
        }
    }
    return rep;
}

RateFit estimate_rate(const ConvergenceReport& report, int state_dim) {
    if (report.rows.size() < 4) throw ConfigError("rate estimation needs at least 4 rows");
    std::vector<double> x, y;
    for (const ReportRow& r : report.rows) {
        x.push_back(r.n_beta);
        y.push_back(r.err_l1);
    }
    return fit_rate(x, y, -1.0 / (2.0 * (state_dim + 1)));
}

StabilityReport run_stability(const ExperimentConfig& cfg) {
    cfg.validate();
    StepGraphon g_k = discretize(cfg.graphon, GridSpec{cfg.blocks}, cfg.singular_policy);
    const int m_samples = cfg.samples_per_block;
    StabilityReport rep;
    for (double eps : cfg.stability_eps) {
        StepGraphon h_k = g_k.shifted(eps);
        double dist2 = lp_distance(Graphon::step(g_k), Graphon::step(h_k), 2.0);
        std::vector<double> gaps(static_cast<std::size_t>(cfg.seed_count), 0.0);
        run_seed_pool(cfg.seed_count, [&](int s) {
            uint64_t seed = cfg.seed_base + static_cast<uint64_t>(s);
            BrownianDriver driver(sub_seed(seed, 3), cfg.grid.dt());
            uint64_t aux_init = sub_seed(seed, 4);
            LimitSolveResult a = solve_graphon_sde(g_k, cfg.model, cfg.init, cfg.grid, m_samples,
                                                   cfg.picard_max_iters, cfg.picard_tol, driver,
                                                   aux_init, ExecPolicy::Serial);
            LimitSolveResult b = solve_graphon_sde(h_k, cfg.model, cfg.init, cfg.grid, m_samples,
                                                   cfg.picard_max_iters, cfg.picard_tol, driver,
                                                   aux_init, ExecPolicy::Serial);
            double acc = 0.0;
            for (int blk = 0; blk < g_k.blocks(); ++blk)
                for (int mm = 0; mm < m_samples; ++mm) {
                    double sup2 = 0.0;
                    for (int st = 0; st <= cfg.grid.steps; ++st) {
                        double d2 = 0.0;
                        for (int d = 0; d < a.laws.dim; ++d) {
                            double diff = a.laws.value(st, blk, mm, d) - b.laws.value(st, blk, mm, d);
                            d2 += diff * diff;
                        }
                        sup2 = std::max(sup2, d2);
                    }
                    acc += sup2;
                }
            gaps[static_cast<std::size_t>(s)] = acc / (static_cast<double>(g_k.blocks()) * m_samples);
        });
        StabilityRow row;
        row.eps = eps;
        row.dist2 = dist2;
        row.gap = mean_se(gaps).mean;
        row.ratio = dist2 > 0.0 ? row.gap / (dist2 * dist2) : 0.0;
        rep.rows.push_back(row);
    }
    return rep;
}

WllnReport run_wlln(const ExperimentConfig& cfg) {
    cfg.validate();
    WllnReport rep;
    rep.eta_grid = cfg.eta_grid;
    StepGraphon g_k = discretize(cfg.graphon, GridSpec{cfg.blocks}, cfg.singular_policy);
    for (int n : cfg.ns) {
        const double beta = cfg.schedule.beta(n);
        std::vector<double> gaps(static_cast<std::size_t>(cfg.seed_count), 0.0);
        std::vector<double> dbls(static_cast<std::size_t>(cfg.seed_count), 0.0);
        run_seed_pool(cfg.seed_count, [&](int s) {
            uint64_t seed = cfg.seed_base + static_cast<uint64_t>(s);
            std::vector<double> pts = sample_random_points(n, sub_seed(seed, 0));
            pts.resize(static_cast<std::size_t>(n));  // particle i sits at U_i
            InteractionGraph graph = sample_w_random(cfg.graphon, pts, beta, cfg.mode, sub_seed(seed, 1));
            BrownianDriver driver(sub_seed(seed, 3), cfg.grid.dt());
            PathEnsemble finite = simulate_particle_system(graph, cfg.model, cfg.init, cfg.grid,
                                                           driver, sub_seed(seed, 2), ExecPolicy::Serial);
            LimitSolveResult limit = solve_graphon_sde(g_k, cfg.model, cfg.init, cfg.grid,
                                                       cfg.samples_per_block, cfg.picard_max_iters,
                                                       cfg.picard_tol, driver, sub_seed(seed, 4),
                                                       ExecPolicy::Serial);
            const int S = cfg.grid.steps;
            const int dim = cfg.model.dim_state();
            std::vector<double> emp_mean(static_cast<std::size_t>(dim), 0.0);
            for (int i = 0; i < n; ++i)
                for (int d = 0; d < dim; ++d) emp_mean[static_cast<std::size_t>(d)] += finite.at(S, i, d) / n;
            std::vector<double> law_mean(static_cast<std::size_t>(dim), 0.0);
            for (int b = 0; b < g_k.blocks(); ++b) {
                std::vector<double> bm = limit.laws.block_mean(S, b);
                for (int d = 0; d < dim; ++d)
                    law_mean[static_cast<std::size_t>(d)] += g_k.length(b) * bm[static_cast<std::size_t>(d)];
            }
            double gap2 = 0.0;
            for (int d = 0; d < dim; ++d) {
                double diff = emp_mean[static_cast<std::size_t>(d)] - law_mean[static_cast<std::size_t>(d)];
                gap2 += diff * diff;
            }
            gaps[static_cast<std::size_t>(s)] = std::sqrt(gap2);

            // empirical measure of the particle states vs the law mixture
            DiscreteMeasure emp;
            emp.dim = dim;
            for (int i = 0; i < n; ++i) emp.push(finite.state(S, i), 1.0 / n);
            DiscreteMeasure mix;
            mix.dim = dim;
            for (int b = 0; b < g_k.blocks(); ++b) {
                DiscreteMeasure law = limit.laws.block_law(S, b);
                for (int k = 0; k < law.atoms(); ++k)
                    mix.push(law.atom(k), g_k.length(b) * law.w[static_cast<std::size_t>(k)]);
            }
            emp = subsample_measure(emp, cfg.dbl_opts.side_cap, seed, 11);
            mix = subsample_measure(mix, cfg.dbl_opts.side_cap, seed, 12);
            dbls[static_cast<std::size_t>(s)] = dbl_exact(emp, mix, cfg.dbl_opts.dbl);
        });
        WllnRow row;
        row.n = n;
        row.beta = beta;
        row.seeds = cfg.seed_count;
        MeanSe g = mean_se(gaps), d = mean_se(dbls);
        row.mean_gap = g.mean;
        row.gap_se = g.se;
        row.mean_dbl = d.mean;
        row.dbl_se = d.se;
        for (double eta : cfg.eta_grid) {
            int count = 0;
            for (double v : gaps)
                if (v > eta) ++count;
            row.exceedance.push_back(static_cast<double>(count) / cfg.seed_count);
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

void emit_report(const ConvergenceReport& report, const ExperimentConfig& cfg,
                 const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir + "/report.csv", std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + dir + "/report.csv");
        f << report_to_csv(report);
    }
    {
        json meta;
        meta["schema"] = "graphsim-report-v1";
        meta["config"] = cfg.to_json();
        meta["config_hash"] = fnv1a_hex(cfg.canonical_text());
        meta["git"] = git_describe();
        json seeds = json::array();
        for (int s = 0; s < cfg.seed_count; ++s) seeds.push_back(cfg.seed_base + static_cast<uint64_t>(s));
        meta["seeds"] = seeds;
        json walls = json::array(), extras = json::array();
        for (const ReportRow& r : report.rows) {
            walls.push_back(r.wall_ms);
            json e;
            e["N"] = r.n;
            e["moment2"] = r.moment2;
            e["err_l1_at_times"] = r.err_l1_at_times;
            e["err_dbl_at_times"] = r.err_dbl_at_times;
            extras.push_back(e);
        }
        meta["wall_ms"] = walls;
        meta["rows_extra"] = extras;
        std::ofstream f(dir + "/meta.json", std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + dir + "/meta.json");
        f << meta.dump(2) << "\n";
    }
    {
        double envelope = -1.0 / (2.0 * (cfg.model.dim_state() + 1));
        std::ofstream f(dir + "/plot.svg", std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + dir + "/plot.svg");
        f << report_to_svg(report, envelope);
    }
}

ReplaySpec load_config_or_meta(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad json in " + path + ": " + e.what());
    }
    ReplaySpec spec;
    if (j.contains("config")) {
        spec.config = ExperimentConfig::from_json(j.at("config"));
        if (j.contains("wall_ms"))
            spec.recorded_wall_ms = j.at("wall_ms").get<std::vector<long>>();
    } else {
        spec.config = ExperimentConfig::from_json(j);
    }
    return spec;
}

}  // namespace graphsim
