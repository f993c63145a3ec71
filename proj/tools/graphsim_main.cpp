// Command-line front end: simulate, limit, converge, rate, stability, wlln,
// dbl, graph, graphon.  Exit codes: 0 ok, 2 config validation, 3 numerical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "graphsim/harness.hpp"

using namespace graphsim;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path);
    f << content;
}

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int64_t seed = -1;
    int threads = 0;
};

ExperimentConfig load_config(const CommonArgs& args, std::vector<long>* recorded_walls = nullptr) {
    ReplaySpec spec = load_config_or_meta(args.config_path);
    if (recorded_walls) *recorded_walls = spec.recorded_wall_ms;
    if (args.seed >= 0) spec.config.seed_base = static_cast<uint64_t>(args.seed);
    if (!args.out_dir.empty()) spec.config.out_dir = args.out_dir;
    if (args.threads > 0) spec.config.threads = args.threads;
    apply_threads(spec.config.threads);
    return spec.config;
}

void write_run_meta(const ExperimentConfig& cfg, const std::string& dir) {
    json meta;
    meta["schema"] = "graphsim-run-v1";
    meta["config"] = cfg.to_json();
    meta["config_hash"] = fnv1a_hex(cfg.canonical_text());
    meta["git"] = git_describe();
    json seeds = json::array();
    for (int s = 0; s < cfg.seed_count; ++s) seeds.push_back(cfg.seed_base + static_cast<uint64_t>(s));
    meta["seeds"] = seeds;
    write_file(dir + "/meta.json", meta.dump(2) + "\n");
}

int cmd_simulate(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    if (cfg.out_dir.empty()) throw ConfigError("simulate needs an output directory (--out)");
    std::filesystem::create_directories(cfg.out_dir);
    const int n = cfg.ns.front();
    const double beta = cfg.schedule.beta(n);
    uint64_t seed = cfg.seed_base;

    InteractionGraph graph;
    if (cfg.mode == GraphMode::Deterministic)
        graph = deterministic_graph(discretize(cfg.graphon, GridSpec{n}, cfg.singular_policy), n, beta);
    else if (cfg.sample_from_discretized)
        graph = sample_w_random(Graphon::step(discretize(cfg.graphon, GridSpec{n}, cfg.singular_policy)),
                                n, beta, cfg.mode, splitmix64(seed * 8 + 1), ExecPolicy::Parallel);
    else
        graph = sample_w_random(cfg.graphon, n, beta, cfg.mode, splitmix64(seed * 8 + 1), ExecPolicy::Parallel);

    BrownianDriver driver(splitmix64(seed * 8 + 3), cfg.grid.dt());
    PathEnsemble ens = simulate_particle_system(graph, cfg.model, cfg.init, cfg.grid, driver,
                                                splitmix64(seed * 8 + 2), ExecPolicy::Parallel);

    std::ostringstream csv;
    csv << "step,time,particle";
    for (int d = 0; d < ens.dim; ++d) csv << ",x" << d + 1;
    csv << "\n";
    char buf[40];
    for (int s = 0; s <= cfg.grid.steps; s += cfg.thin) {
        for (int i = 0; i < ens.particles; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", cfg.grid.time(s));
            csv << s << "," << buf << "," << i;
            for (int d = 0; d < ens.dim; ++d) {
                std::snprintf(buf, sizeof buf, ",%.17g", ens.at(s, i, d));
                csv << buf;
            }
            csv << "\n";
        }
    }
    write_file(cfg.out_dir + "/trajectory.csv", csv.str());
    write_run_meta(cfg, cfg.out_dir);
    std::cout << "wrote " << cfg.out_dir << "/trajectory.csv (" << ens.particles << " particles, "
              << cfg.grid.steps << " steps)\n";
    return 0;
}

int cmd_limit(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    if (cfg.out_dir.empty()) throw ConfigError("limit needs an output directory (--out)");
    std::filesystem::create_directories(cfg.out_dir);
    StepGraphon g_k = discretize(cfg.graphon, GridSpec{cfg.blocks}, cfg.singular_policy);
    BrownianDriver driver(splitmix64(cfg.seed_base * 8 + 3), cfg.grid.dt());
    LimitSolveResult res = solve_graphon_sde(g_k, cfg.model, cfg.init, cfg.grid,
                                             cfg.samples_per_block, cfg.picard_max_iters,
                                             cfg.picard_tol, driver,
                                             splitmix64(cfg.seed_base * 8 + 4), ExecPolicy::Parallel);
    write_file(cfg.out_dir + "/laws.txt", res.laws.serialize());
    json summary;
    summary["iterations"] = res.picard.iterations;
    summary["converged"] = res.picard.converged;
    summary["residuals"] = res.picard.residuals;
    summary["blocks"] = res.laws.blocks;
    summary["samples"] = res.laws.samples;
    write_file(cfg.out_dir + "/summary.json", summary.dump(2) + "\n");
    write_run_meta(cfg, cfg.out_dir);
    std::cout << "picard " << (res.picard.converged ? "converged" : "did NOT converge") << " in "
              << res.picard.iterations << " iterations; residuals:";
    for (double r : res.picard.residuals) std::cout << " " << r;
    std::cout << "\n";
    return res.picard.converged ? 0 : 3;
}

int cmd_converge(const CommonArgs& args, bool with_rate) {
    std::vector<long> walls;
    ExperimentConfig cfg = load_config(args, &walls);
    if (cfg.out_dir.empty()) throw ConfigError("converge needs an output directory (--out)");
    ConvergenceReport rep = run_convergence(cfg);
    if (walls.size() == rep.rows.size())  // replay: carry recorded timings
        for (std::size_t k = 0; k < walls.size(); ++k) rep.rows[k].wall_ms = walls[k];
    emit_report(rep, cfg, cfg.out_dir);
    std::cout << report_to_csv(rep);
    if (with_rate) {
        RateFit fit = estimate_rate(rep, cfg.model.dim_state());
        json out;
        out["slope"] = fit.slope;
        out["intercept"] = fit.intercept;
        out["r2"] = fit.r2;
        out["envelope"] = fit.envelope;
        write_file(cfg.out_dir + "/rate.json", out.dump(2) + "\n");
        std::printf("rate fit: slope=%.4f intercept=%.4f R2=%.4f envelope=%.4f\n", fit.slope,
                    fit.intercept, fit.r2, fit.envelope);
    }
    return 0;
}

int cmd_stability(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    StabilityReport rep = run_stability(cfg);
    std::string csv = "eps,dist2,gap,ratio\n";
    char buf[128];
    for (const StabilityRow& r : rep.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.eps, r.dist2, r.gap, r.ratio);
        csv += buf;
    }
    std::cout << csv;
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_file(cfg.out_dir + "/stability.csv", csv);
        write_run_meta(cfg, cfg.out_dir);
    }
    return 0;
}

int cmd_wlln(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    WllnReport rep = run_wlln(cfg);
    std::string csv = "N,beta,seeds,mean_gap,gap_se,mean_dbl,dbl_se";
    for (double eta : rep.eta_grid) csv += ",exceed_" + std::to_string(eta);
    csv += "\n";
    char buf[256];
    for (const WllnRow& r : rep.rows) {
        csv += std::to_string(r.n);
        std::snprintf(buf, sizeof buf, ",%.17g,%d,%.17g,%.17g,%.17g,%.17g", r.beta, r.seeds,
                      r.mean_gap, r.gap_se, r.mean_dbl, r.dbl_se);
        csv += buf;
        for (double e : r.exceedance) {
            std::snprintf(buf, sizeof buf, ",%.17g", e);
            csv += buf;
        }
        csv += "\n";
    }
    std::cout << csv;
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_file(cfg.out_dir + "/wlln.csv", csv);
        write_run_meta(cfg, cfg.out_dir);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interacting particle systems on sparse random graphs and their graphon limits"};
    app.require_subcommand(1);

    CommonArgs common;
    auto add_common = [&common](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", common.config_path, "experiment config json (or meta.json)");
        if (needs_config) opt->required();
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--seed", common.seed, "override seed base");
        sub->add_option("--threads", common.threads, "worker thread count (0 = default)");
    };

    auto* simulate = app.add_subcommand("simulate", "run the finite particle system");
    add_common(simulate);
    auto* limit = app.add_subcommand("limit", "solve the limiting system by Picard iteration");
    add_common(limit);
    auto* converge = app.add_subcommand("converge", "coupling-error sweep over N");
    add_common(converge);
    auto* rate = app.add_subcommand("rate", "convergence sweep plus log-log rate fit");
    add_common(rate);
    auto* stability = app.add_subcommand("stability", "kernel perturbation stability ratios");
    add_common(stability);
    auto* wlln = app.add_subcommand("wlln", "law of large numbers at random points");
    add_common(wlln);

    auto* dbl = app.add_subcommand("dbl", "bounded-Lipschitz distance between measure files");
    std::string mu_path, nu_path;
    bool use_dict = false;
    int cap = 512;
    dbl->add_option("--mu", mu_path)->required();
    dbl->add_option("--nu", nu_path)->required();
    dbl->add_flag("--dict", use_dict, "dictionary lower bound instead of the exact LP");
    dbl->add_option("--cap", cap, "combined support cap for the exact LP");

    auto* graph = app.add_subcommand("graph", "sample or inspect interaction graphs");
    auto* gsample = graph->add_subcommand("sample", "sample a W-random graph");
    std::string graphon_json = R"({"kind":"constant","c":1.0})";
    std::string beta_form = "const:1.0";
    std::string mode_str = "symmetric";
    std::string out_path;
    int gn = 16;
    int64_t gseed = 1;
    gsample->add_option("--graphon", graphon_json, "graphon descriptor json or @file");
    gsample->add_option("--n", gn)->required();
    gsample->add_option("--beta-form", beta_form, "const:b | power:gamma | powerlaw:a,b");
    gsample->add_option("--mode", mode_str, "symmetric | directed | deterministic");
    gsample->add_option("--seed", gseed);
    gsample->add_option("--out", out_path);
    auto* gstats = graph->add_subcommand("stats", "degree and norm statistics of a graph file");
    std::string stats_in;
    gstats->add_option("--in", stats_in)->required();

    auto* graphon_cmd = app.add_subcommand("graphon", "graphon utilities");
    auto* gnorm = graphon_cmd->add_subcommand("norm", "L^p norm of a graphon");
    std::string norm_kind = "constant";
    double norm_a = 0.2, norm_c = 1.0, norm_p = 2.0;
    bool force_quad = false;
    std::string norm_json;
    gnorm->add_option("--kind", norm_kind, "constant|power_law|uniform_attachment|product");
    gnorm->add_option("--a", norm_a);
    gnorm->add_option("--c", norm_c);
    gnorm->add_option("--p", norm_p);
    gnorm->add_option("--json", norm_json, "full descriptor json or @file");
    gnorm->add_flag("--quadrature", force_quad, "force the quadrature path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(common);
        if (limit->parsed()) return cmd_limit(common);
        if (converge->parsed()) return cmd_converge(common, false);
        if (rate->parsed()) return cmd_converge(common, true);
        if (stability->parsed()) return cmd_stability(common);
        if (wlln->parsed()) return cmd_wlln(common);
        if (dbl->parsed()) {
            DiscreteMeasure mu = measure_from_text(slurp(mu_path));
            DiscreteMeasure nu = measure_from_text(slurp(nu_path));
            double v = use_dict ? dbl_estimate(mu, nu) : dbl_exact(mu, nu, DblOptions{cap});
            std::printf("%.12g\n", v);
            return 0;
        }
        if (gsample->parsed()) {
            std::string desc = graphon_json;
            if (!desc.empty() && desc[0] == '@') desc = slurp(desc.substr(1));
            Graphon g = Graphon::from_json(json::parse(desc));
            SparsitySchedule sched;
            if (beta_form.rfind("const:", 0) == 0) {
                sched.form = SparsitySchedule::Form::Constant;
                sched.beta0 = std::stod(beta_form.substr(6));
            } else if (beta_form.rfind("power:", 0) == 0) {
                sched.form = SparsitySchedule::Form::Power;
                sched.gamma = std::stod(beta_form.substr(6));
            } else if (beta_form.rfind("powerlaw:", 0) == 0) {
                std::string rest = beta_form.substr(9);
                auto comma = rest.find(',');
                if (comma == std::string::npos) throw ConfigError("powerlaw:a,b expected");
                sched.form = SparsitySchedule::Form::PowerLawRegime;
                sched.a = std::stod(rest.substr(0, comma));
                sched.b = std::stod(rest.substr(comma + 1));
            } else {
                throw ConfigError("unknown --beta-form '" + beta_form + "'");
            }
            double beta = sched.beta(gn);
            GraphMode mode = graph_mode_from_string(mode_str);
            InteractionGraph ig =
                mode == GraphMode::Deterministic
                    ? deterministic_graph(discretize(g, GridSpec{gn}), gn, beta)
                    : sample_w_random(g, gn, beta, mode, static_cast<uint64_t>(gseed), ExecPolicy::Parallel);
            std::string text = ig.serialize();
            if (out_path.empty())
                std::cout << text;
            else
                write_file(out_path, text);
            return 0;
        }
        if (gstats->parsed()) {
            InteractionGraph ig = InteractionGraph::deserialize(slurp(stats_in));
            GraphStats st = graph_stats(ig);
            std::printf("n %d\nbeta %.12g\nmean_degree %.12g\nedge_density %.12g\n", ig.n(),
                        ig.beta(), st.mean_degree, st.edge_density);
            std::printf("norm1 %.12g\nnorm2 %.12g\nnorm4 %.12g\n", st.norm1, st.norm2, st.norm4);
            return 0;
        }
        if (gnorm->parsed()) {
            Graphon g = Graphon::constant(1.0);
            if (!norm_json.empty()) {
                std::string desc = norm_json[0] == '@' ? slurp(norm_json.substr(1)) : norm_json;
                g = Graphon::from_json(json::parse(desc));
            } else if (norm_kind == "constant") {
                g = Graphon::constant(norm_c);
            } else if (norm_kind == "power_law") {
                g = Graphon::power_law(norm_a);
            } else if (norm_kind == "uniform_attachment") {
                g = Graphon::uniform_attachment();
            } else if (norm_kind == "product") {
                g = Graphon::product();
            } else {
                throw ConfigError("unknown graphon kind '" + norm_kind + "'");
            }
            QuadOptions opt;
            opt.force_quadrature = force_quad;
            std::printf("%.12g\n", lp_norm(g, norm_p, opt));
            return 0;
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
