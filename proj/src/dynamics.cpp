#include "graphsim/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <nlohmann/json.hpp>

namespace graphsim {

using nlohmann::json;

void InitialSampler::sample(uint64_t seed, uint64_t index, double* out) const {
    const InitialLaw& law = law_for(index);
    for (int d = 0; d < dim; ++d) {
        switch (law.kind) {
            case InitialLaw::Kind::Point: out[d] = law.a[static_cast<std::size_t>(d)]; break;
            case InitialLaw::Kind::Gaussian:
                out[d] = law.a[static_cast<std::size_t>(d)] +
                         law.b[static_cast<std::size_t>(d)] *
                             rng::normal01(seed, rng::Domain::InitialCondition, index,
                                           static_cast<uint32_t>(d));
                break;
            case InitialLaw::Kind::UniformBox:
                out[d] = law.a[static_cast<std::size_t>(d)] +
                         (law.b[static_cast<std::size_t>(d)] - law.a[static_cast<std::size_t>(d)]) *
                             rng::uniform01(seed, rng::Domain::InitialCondition, index,
                                            static_cast<uint32_t>(d));
                break;
        }
    }
}

namespace {

InitialLaw law_from_json(const json& j, int dim) {
    InitialLaw law;
    std::string kind = j.at("kind").get<std::string>();
    auto vec = [&](const char* name, double fallback) {
        std::vector<double> v(static_cast<std::size_t>(dim), fallback);
        if (j.contains(name)) {
            if (j[name].is_number())
                std::fill(v.begin(), v.end(), j[name].get<double>());
            else
                v = j[name].get<std::vector<double>>();
        }
        if (static_cast<int>(v.size()) != dim) throw ConfigError("initial law dimension mismatch");
        return v;
    };
    if (kind == "point") {
        law.kind = InitialLaw::Kind::Point;
        law.a = vec("x", 0.0);
    } else if (kind == "gaussian") {
        law.kind = InitialLaw::Kind::Gaussian;
        law.a = vec("mean", 0.0);
        law.b = vec("sd", 1.0);
    } else if (kind == "uniform") {
        law.kind = InitialLaw::Kind::UniformBox;
        law.a = vec("lo", 0.0);
        law.b = vec("hi", 1.0);
    } else {
        throw ConfigError("unknown initial law '" + kind + "'");
    }
    return law;
}

json law_to_json(const InitialLaw& law) {
    json j;
    switch (law.kind) {
        case InitialLaw::Kind::Point:
            j["kind"] = "point";
            j["x"] = law.a;
            break;
        case InitialLaw::Kind::Gaussian:
            j["kind"] = "gaussian";
            j["mean"] = law.a;
            j["sd"] = law.b;
            break;
        case InitialLaw::Kind::UniformBox:
            j["kind"] = "uniform";
            j["lo"] = law.a;
            j["hi"] = law.b;
            break;
    }
    return j;
}

}  // namespace

json InitialSampler::to_json() const {
    json j;
    j["dim"] = dim;
    if (laws.size() == 1) {
        j.update(law_to_json(laws[0]));
    } else {
        json table = json::array();
        for (const auto& l : laws) table.push_back(law_to_json(l));
        j["kind"] = "table";
        j["table"] = table;
    }
    if (moment_cap > 0.0) j["moment_cap"] = moment_cap;
    return j;
}

InitialSampler InitialSampler::from_json(const json& j) {
    InitialSampler s;
    s.dim = j.value("dim", 1);
    if (s.dim < 1 || s.dim > kMaxDim) throw ConfigError("state dimension must be in [1,8]");
    s.moment_cap = j.value("moment_cap", 0.0);
    if (j.value("kind", "") == "table") {
        for (const auto& e : j.at("table")) s.laws.push_back(law_from_json(e, s.dim));
        if (s.laws.empty()) throw ConfigError("initial law table is empty");
    } else {
        s.laws.push_back(law_from_json(j, s.dim));
    }
    return s;
}

CoefficientModel::CoefficientModel(int dim_state, int dim_noise, DriftSpec drift, SigmaSpec sigma,
                                   double declared_lipschitz)
    : n_(dim_state), m_(dim_noise), drift_(std::move(drift)), sigma_(std::move(sigma)),
      lip_(declared_lipschitz) {
    if (n_ < 1 || n_ > kMaxDim || m_ < 1 || m_ > kMaxDim)
        throw ConfigError("state/noise dimensions must be in [1,8]");
    if (drift_.kind == DriftSpec::Kind::Kuramoto && (n_ != 1 || m_ != 1))
        throw ConfigError("kuramoto drift requires n = m = 1");

    std::vector<std::string> vars = {"t", "mass"};
    for (int d = 0; d < n_; ++d) vars.push_back("x" + std::to_string(d + 1));
    for (int d = 0; d < n_; ++d) vars.push_back("m" + std::to_string(d + 1));
    if (n_ == 1) {
        vars.push_back("x");
        vars.push_back("m");
    }
    if (drift_.kind == DriftSpec::Kind::Expr) {
        if (static_cast<int>(drift_.exprs.size()) != n_)
            throw ConfigError("drift needs one expression per state component");
        for (const auto& e : drift_.exprs) drift_exprs_.push_back(expr::Expression::parse(e, vars));
    }
    if (sigma_.kind == SigmaSpec::Kind::Expr) {
        if (static_cast<int>(sigma_.exprs.size()) != n_ * m_)
            throw ConfigError("sigma needs n*m expressions");
        for (const auto& e : sigma_.exprs) sigma_exprs_.push_back(expr::Expression::parse(e, vars));
    }
    if (lip_ <= 0.0) {
        // builtin defaults; probes use measures with mass below ~2.5
        double drift_const = 0.0;
        switch (drift_.kind) {
            case DriftSpec::Kind::LinearMean: drift_const = std::max(std::abs(drift_.a), std::abs(drift_.c)); break;
            case DriftSpec::Kind::Kuramoto: drift_const = drift_.kappa * 3.5; break;
            case DriftSpec::Kind::Expr: drift_const = 10.0; break;
        }
        double sigma_const = 0.0;
        switch (sigma_.kind) {
            case SigmaSpec::Kind::Constant: sigma_const = std::abs(sigma_.sigma0); break;
            case SigmaSpec::Kind::MeanScaled: sigma_const = 2.0 * std::abs(sigma_.sigma0); break;
            case SigmaSpec::Kind::Expr: sigma_const = 10.0; break;
        }
        lip_ = drift_const + sigma_const;
        if (lip_ <= 0.0) lip_ = 1e-12;
    }
}

bool CoefficientModel::measure_dependent_sigma() const {
    if (sigma_.kind == SigmaSpec::Kind::MeanScaled) return true;
    if (sigma_.kind == SigmaSpec::Kind::Expr) {
        for (const auto& e : sigma_exprs_) {
            if (e.uses("mass") || e.uses("m")) return true;
            for (int d = 1; d <= n_; ++d)
                if (e.uses("m" + std::to_string(d))) return true;
        }
    }
    return false;
}

void CoefficientModel::fill_vars(double t, const double* x, const MeasureView& mu,
                                 double* vars) const {
    vars[0] = t;
    vars[1] = mu.total_mass();
    for (int d = 0; d < n_; ++d) vars[2 + d] = x[d];
    for (int d = 0; d < n_; ++d) vars[2 + n_ + d] = mu.first_moment(d);
    if (n_ == 1) {
        vars[2 + 2 * n_] = x[0];
        vars[3 + 2 * n_] = vars[2 + n_];
    }
}

void CoefficientModel::drift(double t, const double* x, const MeasureView& mu, double* out) const {
    switch (drift_.kind) {
        case DriftSpec::Kind::LinearMean:
            for (int d = 0; d < n_; ++d) out[d] = drift_.a * x[d] + drift_.c * mu.first_moment(d);
            return;
        case DriftSpec::Kind::Kuramoto:
            // int sin(y - x) mu(dy) = cos(x) int sin - sin(x) int cos
            out[0] = drift_.kappa *
                     (std::cos(x[0]) * mu.sin_moment() - std::sin(x[0]) * mu.cos_moment());
            return;
        case DriftSpec::Kind::Expr: {
            double vars[2 * kMaxDim + 4];
            fill_vars(t, x, mu, vars);
            for (int d = 0; d < n_; ++d) out[d] = drift_exprs_[static_cast<std::size_t>(d)].eval(vars);
            return;
        }
    }
}

void CoefficientModel::sigma(double t, const double* x, const MeasureView& mu, double* out) const {
    switch (sigma_.kind) {
        case SigmaSpec::Kind::Constant:
        case SigmaSpec::Kind::MeanScaled: {
            double s = sigma_.sigma0;
            if (sigma_.kind == SigmaSpec::Kind::MeanScaled) s *= 1.0 + std::tanh(mu.total_mass());
            for (int d = 0; d < n_; ++d)
                for (int c = 0; c < m_; ++c) out[d * m_ + c] = (d == c) ? s : 0.0;
            return;
        }
        case SigmaSpec::Kind::Expr: {
            double vars[2 * kMaxDim + 4];
            fill_vars(t, x, mu, vars);
            for (int k = 0; k < n_ * m_; ++k) out[k] = sigma_exprs_[static_cast<std::size_t>(k)].eval(vars);
            return;
        }
    }
}

json CoefficientModel::to_json() const {
    json j;
    j["dim_state"] = n_;
    j["dim_noise"] = m_;
    j["lipschitz"] = lip_;
    json d;
    switch (drift_.kind) {
        case DriftSpec::Kind::LinearMean:
            d["kind"] = "linear_mean";
            d["a"] = drift_.a;
            d["c"] = drift_.c;
            break;
        case DriftSpec::Kind::Kuramoto:
            d["kind"] = "kuramoto";
            d["kappa"] = drift_.kappa;
            break;
        case DriftSpec::Kind::Expr:
            d["kind"] = "expr";
            d["exprs"] = drift_.exprs;
            break;
    }
    j["drift"] = d;
    json s;
    switch (sigma_.kind) {
        case SigmaSpec::Kind::Constant:
            s["kind"] = "constant";
            s["sigma0"] = sigma_.sigma0;
            break;
        case SigmaSpec::Kind::MeanScaled:
            s["kind"] = "mean_sigma";
            s["sigma0"] = sigma_.sigma0;
            break;
        case SigmaSpec::Kind::Expr:
            s["kind"] = "expr";
            s["exprs"] = sigma_.exprs;
            break;
    }
    j["sigma"] = s;
    return j;
}

CoefficientModel CoefficientModel::from_json(const json& j) {
    DriftSpec d;
    const json& jd = j.at("drift");
    std::string dk = jd.at("kind").get<std::string>();
    if (dk == "linear_mean") {
        d.kind = DriftSpec::Kind::LinearMean;
        d.a = jd.value("a", 0.0);
        d.c = jd.value("c", 0.0);
    } else if (dk == "kuramoto") {
        d.kind = DriftSpec::Kind::Kuramoto;
        d.kappa = jd.value("kappa", 1.0);
    } else if (dk == "expr") {
        d.kind = DriftSpec::Kind::Expr;
        d.exprs = jd.at("exprs").get<std::vector<std::string>>();
    } else {
        throw ConfigError("unknown drift kind '" + dk + "'");
    }
    SigmaSpec s;
    const json& js = j.at("sigma");
    std::string sk = js.at("kind").get<std::string>();
    if (sk == "constant") {
        s.kind = SigmaSpec::Kind::Constant;
        s.sigma0 = js.value("sigma0", 0.0);
    } else if (sk == "mean_sigma") {
        s.kind = SigmaSpec::Kind::MeanScaled;
        s.sigma0 = js.value("sigma0", 0.0);
    } else if (sk == "expr") {
        s.kind = SigmaSpec::Kind::Expr;
        s.exprs = js.at("exprs").get<std::vector<std::string>>();
    } else {
        throw ConfigError("unknown sigma kind '" + sk + "'");
    }
    return CoefficientModel(j.value("dim_state", 1), j.value("dim_noise", 1), std::move(d),
                            std::move(s), j.value("lipschitz", 0.0));
}

double GraphRowView::total_mass() const {
    double acc = 0.0;
    g_.for_row(row_, [&](int, double w) { acc += w; });
    return acc * scale_;
}

double GraphRowView::first_moment(int component) const {
    double acc = 0.0;
    g_.for_row(row_, [&](int j, double w) { acc += w * states_[static_cast<std::size_t>(j) * dim_ + component]; });
    return acc * scale_;
}

double GraphRowView::sin_moment() const {
    if (dim_ != 1) throw WrongDimension("sin_moment needs dim 1");
    double acc = 0.0;
    g_.for_row(row_, [&](int j, double w) { acc += w * std::sin(states_[static_cast<std::size_t>(j)]); });
    return acc * scale_;
}

double GraphRowView::cos_moment() const {
    if (dim_ != 1) throw WrongDimension("cos_moment needs dim 1");
    double acc = 0.0;
    g_.for_row(row_, [&](int j, double w) { acc += w * std::cos(states_[static_cast<std::size_t>(j)]); });
    return acc * scale_;
}

std::vector<double> PathEnsemble::step_states(int step) const {
    auto begin = data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(step) * particles * dim);
    return std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(particles) * dim));
}

PathEnsemble simulate_particle_system(const InteractionGraph& graph, const CoefficientModel& model,
                                      const InitialSampler& init, const TimeGrid& grid,
                                      const BrownianDriver& driver, uint64_t init_seed,
                                      ExecPolicy policy, IncrementLog* log) {
    const int n = graph.n();
    const int dim = model.dim_state();
    const int m = model.dim_noise();
    if (init.dim != dim) throw DimensionMismatch("initial sampler dimension != model state dim");
    if (std::abs(driver.dt() - grid.dt()) > 1e-15)
        throw GridMismatch("driver dt does not match the time grid");

    PathEnsemble ens;
    ens.grid = grid;
    ens.particles = n;
    ens.dim = dim;
    ens.data.resize(static_cast<std::size_t>(grid.steps + 1) * n * dim);
    ens.keys.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ens.keys[static_cast<std::size_t>(i)] = NoiseKey::particle(static_cast<uint64_t>(i));

    for (int i = 0; i < n; ++i) init.sample(init_seed, static_cast<uint64_t>(i), &ens.at(0, i, 0));

    const double dt = grid.dt();
    std::atomic<int> bad_step{grid.steps + 1};
    for (int s = 0; s < grid.steps; ++s) {
        const double* prev = ens.data.data() + static_cast<std::size_t>(s) * n * dim;
        double* next = ens.data.data() + static_cast<std::size_t>(s + 1) * n * dim;
        const double t = grid.time(s);
        for_indices(n, policy, [&](int i) {
            GraphRowView mu(graph, i, prev, dim);
            double b[kMaxDim], sg[kMaxDim * kMaxDim];
            const double* x = prev + static_cast<std::size_t>(i) * dim;
            model.drift(t, x, mu, b);
            model.sigma(t, x, mu, sg);
            double* y = next + static_cast<std::size_t>(i) * dim;
            double dw[kMaxDim];
            for (int c = 0; c < m; ++c)
                dw[c] = driver.increment(ens.keys[static_cast<std::size_t>(i)], static_cast<uint32_t>(s),
                                         static_cast<uint32_t>(c));
            bool ok = true;
            for (int d = 0; d < dim; ++d) {
                double v = x[d] + b[d] * dt;
                for (int c = 0; c < m; ++c) v += sg[d * m + c] * dw[c];
                y[d] = v;
                ok = ok && std::isfinite(v);
            }
            if (!ok) bad_step.store(s + 1, std::memory_order_relaxed);
        });
        if (log)
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < m; ++c)
                    log->entries.push_back({ens.keys[static_cast<std::size_t>(i)].id, static_cast<uint32_t>(s),
                                            static_cast<uint32_t>(c),
                                            driver.increment(ens.keys[static_cast<std::size_t>(i)],
                                                             static_cast<uint32_t>(s), static_cast<uint32_t>(c))});
        if (bad_step.load() <= s + 1)
            throw NonFiniteState("particle state blew up at step " + std::to_string(bad_step.load()));
    }
    return ens;
}

MomentReport particle_moments(const PathEnsemble& ens, double k) {
    if (!(k >= 1.0)) throw ConfigError("moment order must be >= 1");
    MomentReport r;
    r.per_step.resize(static_cast<std::size_t>(ens.grid.steps) + 1, 0.0);
    std::vector<double> sup(static_cast<std::size_t>(ens.particles), 0.0);
    for (int s = 0; s <= ens.grid.steps; ++s) {
        double acc = 0.0;
        for (int i = 0; i < ens.particles; ++i) {
            double norm2 = 0.0;
            for (int d = 0; d < ens.dim; ++d) norm2 += ens.at(s, i, d) * ens.at(s, i, d);
            double v = std::pow(std::sqrt(norm2), k);
            acc += v;
            sup[static_cast<std::size_t>(i)] = std::max(sup[static_cast<std::size_t>(i)], v);
        }
        r.per_step[static_cast<std::size_t>(s)] = acc / ens.particles;
    }
    for (double v : sup) r.sup_average += v;
    r.sup_average /= ens.particles;
    return r;
}

CoefficientValidation validate_coefficients(const CoefficientModel& model, int trials,
                                            uint64_t seed) {
    CoefficientValidation rep;
    rep.trials = trials;
    const int n = model.dim_state();
    const int m = model.dim_noise();
    auto rnd = [&](uint64_t k, uint32_t a, uint32_t b) { return rng::uniform01(seed, rng::Domain::Probe, k, a, b); };

    auto random_measure = [&](uint64_t k) {
        DiscreteMeasure mu;
        mu.dim = n;
        int atoms = 1 + static_cast<int>(rnd(k, 0, 0) * 6);
        for (int a = 0; a < atoms; ++a) {
            double x[kMaxDim];
            for (int d = 0; d < n; ++d) x[d] = 2.0 * rnd(k, static_cast<uint32_t>(a + 1), static_cast<uint32_t>(d)) - 1.0;
            mu.push(x, 0.4 * rnd(k, static_cast<uint32_t>(a + 1), 100));
        }
        return mu;
    };

    for (int t = 0; t < trials; ++t) {
        uint64_t k = 2 * static_cast<uint64_t>(t);
        double tt = rnd(k, 200, 0);
        double x[kMaxDim], y[kMaxDim];
        for (int d = 0; d < n; ++d) {
            x[d] = 2.0 * rnd(k, 201, static_cast<uint32_t>(d)) - 1.0;
            y[d] = 2.0 * rnd(k, 202, static_cast<uint32_t>(d)) - 1.0;
        }
        DiscreteMeasure mu = random_measure(k);
        DiscreteMeasure nu = random_measure(k + 1);
        DiscreteMeasureView vm(mu), vn(nu);

        double b1[kMaxDim], b2[kMaxDim], s1[kMaxDim * kMaxDim], s2[kMaxDim * kMaxDim];
        model.drift(tt, x, vm, b1);
        model.drift(tt, y, vn, b2);
        model.sigma(tt, x, vm, s1);
        model.sigma(tt, y, vn, s2);

        double dxy = 0.0;
        for (int d = 0; d < n; ++d) dxy += (x[d] - y[d]) * (x[d] - y[d]);
        dxy = std::sqrt(dxy);
        double dbl = dbl_exact(mu, nu);
        double db = 0.0, ds = 0.0;
        for (int d = 0; d < n; ++d) db += (b1[d] - b2[d]) * (b1[d] - b2[d]);
        for (int c = 0; c < n * m; ++c) ds += (s1[c] - s2[c]) * (s1[c] - s2[c]);
        double num = std::sqrt(db) + std::sqrt(ds);
        double den = dxy + dbl;
        if (den > 1e-9) rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, num / den);

        double nb = 0.0, ns = 0.0, nx = 0.0;
        for (int d = 0; d < n; ++d) {
            nb += b1[d] * b1[d];
            nx += x[d] * x[d];
        }
        for (int c = 0; c < n * m; ++c) ns += s1[c] * s1[c];
        double growth = (std::sqrt(nb) + std::sqrt(ns)) / (1.0 + std::sqrt(nx) + vm.bl_norm());
        rep.max_growth_ratio = std::max(rep.max_growth_ratio, growth);
    }
    double cap = model.declared_lipschitz() * 1.01;
    rep.lipschitz_ok = rep.max_lipschitz_ratio <= cap;
    rep.growth_ok = rep.max_growth_ratio <= cap;
    return rep;
}

}  // namespace graphsim
