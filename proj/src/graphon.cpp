#include "graphsim/graphon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "graphsim/rng.hpp"

namespace graphsim {

using nlohmann::json;

StepGraphon::StepGraphon(std::vector<double> lengths, std::vector<double> values)
    : k_(static_cast<int>(lengths.size())), lengths_(std::move(lengths)), values_(std::move(values)) {
    if (k_ == 0) throw ConfigError("step graphon needs at least one block");
    if (values_.size() != static_cast<std::size_t>(k_) * k_)
        throw ConfigError("step graphon value matrix must be K x K");
    double sum = 0.0;
    bounds_.resize(static_cast<std::size_t>(k_) + 1);
    bounds_[0] = 0.0;
    for (int i = 0; i < k_; ++i) {
        if (!(lengths_[static_cast<std::size_t>(i)] > 0.0))
            throw ConfigError("step graphon partition lengths must be positive");
        sum += lengths_[static_cast<std::size_t>(i)];
        bounds_[static_cast<std::size_t>(i) + 1] = sum;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("step graphon partition lengths must sum to 1");
    bounds_.back() = 1.0;
    for (int i = 0; i < k_; ++i)
        for (int j = 0; j < k_; ++j) {
            if (!(value(i, j) >= 0.0)) throw ConfigError("step graphon values must be nonnegative");
            if (value(i, j) != value(j, i)) throw NonSymmetric("step graphon value matrix");
        }
}

StepGraphon StepGraphon::uniform(int blocks, std::vector<double> values) {
    return StepGraphon(std::vector<double>(static_cast<std::size_t>(blocks), 1.0 / blocks),
                       std::move(values));
}

int StepGraphon::block_of(double x) const {
    if (x <= 0.0) return 0;
    if (x >= 1.0) return k_ - 1;
    int lo = static_cast<int>(std::upper_bound(bounds_.begin(), bounds_.end(), x) -
                              bounds_.begin()) - 1;
    return std::clamp(lo, 0, k_ - 1);
}

double StepGraphon::max_value() const {
    return *std::max_element(values_.begin(), values_.end());
}

StepGraphon StepGraphon::shifted(double bump) const {
    std::vector<double> v = values_;
    for (double& x : v) {
        x += bump;
        if (x < 0.0) throw ConfigError("shifted step graphon became negative");
    }
    return StepGraphon(lengths_, std::move(v));
}

namespace {

// Construction-time probe of symmetry and nonnegativity for user kernels.
void probe_user_kernel(const Graphon& g) {
    for (int t = 0; t < 256; ++t) {
        double x = rng::uniform01(0xC0FFEE, rng::Domain::Probe, static_cast<uint64_t>(t), 0);
        double y = rng::uniform01(0xC0FFEE, rng::Domain::Probe, static_cast<uint64_t>(t), 1);
        double a = g.eval(x, y), b = g.eval(y, x);
        if (std::isfinite(a) && a < 0.0)
            throw ConfigError("user graphon is negative at sampled point");
        if (a != b && !(std::isnan(a) && std::isnan(b)))
            throw NonSymmetric("user graphon expression");
    }
}

}  // namespace

Graphon Graphon::constant(double c) {
    if (!(c >= 0.0)) throw ConfigError("constant graphon requires c >= 0");
    Graphon g;
    g.kind_ = GraphonKind::Constant;
    g.param_ = c;
    g.lipschitz_ = true;
    g.bounded_ = true;
    g.bound_ = c;
    return g;
}

Graphon Graphon::power_law(double a) {
    // a < 1/2 keeps the kernel square integrable, which the solver needs.
    if (!(a > 0.0) || !(a < 0.5))
        throw ConfigError("power_law requires a in (0, 1/2), got " + std::to_string(a));
    Graphon g;
    g.kind_ = GraphonKind::PowerLaw;
    g.param_ = a;
    g.singular_ = true;
    g.bounded_ = false;
    g.bound_ = std::numeric_limits<double>::infinity();
    return g;
}

Graphon Graphon::uniform_attachment() {
    Graphon g;
    g.kind_ = GraphonKind::UniformAttachment;
    g.lipschitz_ = true;
    g.bounded_ = true;
    g.bound_ = 1.0;
    g.diagonal_kink_ = true;
    return g;
}

Graphon Graphon::product() {
    Graphon g;
    g.kind_ = GraphonKind::Product;
    g.lipschitz_ = true;
    g.bounded_ = true;
    g.bound_ = 1.0;
    return g;
}

Graphon Graphon::step(StepGraphon s) {
    Graphon g;
    g.kind_ = GraphonKind::Step;
    g.bounded_ = true;
    g.bound_ = s.max_value();
    g.step_ = std::move(s);
    return g;
}

Graphon Graphon::user(const std::string& expression, bool lipschitz, bool singular_at_zero) {
    Graphon g;
    g.kind_ = GraphonKind::User;
    g.expr_ = expr::Expression::parse(expression, {"x", "y"});
    g.lipschitz_ = lipschitz;
    g.singular_ = singular_at_zero;
    g.bounded_ = !singular_at_zero;
    g.bound_ = std::numeric_limits<double>::quiet_NaN();
    g.diagonal_kink_ = g.expr_.has_min_max();
    probe_user_kernel(g);
    return g;
}

double Graphon::eval(double x, double y) const {
    switch (kind_) {
        case GraphonKind::Constant: return param_;
        case GraphonKind::PowerLaw:
            if (x <= 0.0 || y <= 0.0) return std::numeric_limits<double>::infinity();
            return std::pow(x * y, -param_);
        case GraphonKind::UniformAttachment: return 1.0 - std::max(x, y);
        case GraphonKind::Product: return x * y;
        case GraphonKind::Step: return step_->eval(x, y);
        case GraphonKind::User: {
            double v[2] = {x, y};
            return expr_.eval(v);
        }
    }
    return 0.0;
}

const StepGraphon& Graphon::step_data() const {
    if (!step_) throw ConfigError("graphon is not a step graphon");
    return *step_;
}

json Graphon::to_json() const {
    json j;
    switch (kind_) {
        case GraphonKind::Constant:
            j["kind"] = "constant";
            j["c"] = param_;
            break;
        case GraphonKind::PowerLaw:
            j["kind"] = "power_law";
            j["a"] = param_;
            break;
        case GraphonKind::UniformAttachment: j["kind"] = "uniform_attachment"; break;
        case GraphonKind::Product: j["kind"] = "product"; break;
        case GraphonKind::Step: {
            j["kind"] = "step";
            j["partition"] = step_->lengths();
            std::vector<std::vector<double>> w;
            for (int i = 0; i < step_->blocks(); ++i) {
                std::vector<double> row;
                for (int jj = 0; jj < step_->blocks(); ++jj) row.push_back(step_->value(i, jj));
                w.push_back(std::move(row));
            }
            j["W"] = w;
            break;
        }
        case GraphonKind::User:
            j["kind"] = "user";
            j["expr"] = expr_.text();
            j["lipschitz"] = lipschitz_;
            j["singular"] = singular_;
            break;
    }
    return j;
}

Graphon Graphon::from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return constant(j.value("c", 1.0));
    if (kind == "power_law") return power_law(j.at("a").get<double>());
    if (kind == "uniform_attachment") return uniform_attachment();
    if (kind == "product") return product();
    if (kind == "step") {
        auto part = j.at("partition").get<std::vector<double>>();
        auto rows = j.at("W").get<std::vector<std::vector<double>>>();
        std::vector<double> flat;
        for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
        return step(StepGraphon(part, flat));
    }
    if (kind == "user")
        return user(j.at("expr").get<std::string>(), j.value("lipschitz", false),
                    j.value("singular", false));
    throw ConfigError("unknown graphon kind '" + kind + "'");
}

double grid_project(double x, const GridSpec& grid) {
    if (x <= 0.0) return 0.0;
    int i = static_cast<int>(std::floor(x * grid.n));
    if (i >= grid.n) i = grid.n - 1;
    return grid.point(i);
}

StepGraphon discretize(const Graphon& g, const GridSpec& grid, SingularPolicy policy,
                       double clamp_cap) {
    if (policy == SingularPolicy::Auto)
        policy = g.singular_at_zero() ? SingularPolicy::MidpointShift : SingularPolicy::Reject;
    const int n = grid.n;
    std::vector<double> values(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double xi = grid.point(i), xj = grid.point(j);
            if (policy == SingularPolicy::MidpointShift) {
                xi = (i + 0.5) / n;
                xj = (j + 0.5) / n;
            }
            double v = g.eval(xi, xj);
            if (!std::isfinite(v)) {
                if (policy == SingularPolicy::Clamp)
                    v = clamp_cap;
                else
                    throw SingularGrid("kernel infinite at grid pair (" + std::to_string(xi) +
                                       ", " + std::to_string(xj) + ")");
            }
            if (policy == SingularPolicy::Clamp) v = std::min(v, clamp_cap);
            values[static_cast<std::size_t>(i) * n + j] = v;
            values[static_cast<std::size_t>(j) * n + i] = v;
        }
    }
    return StepGraphon::uniform(n, std::move(values));
}

namespace {

double step_lp_norm_pow(const StepGraphon& s, double p) {
    double acc = 0.0;
    for (int i = 0; i < s.blocks(); ++i)
        for (int j = 0; j < s.blocks(); ++j)
            acc += s.length(i) * s.length(j) * std::pow(s.value(i, j), p);
    return acc;
}

// Exact |g-h|_p on the common refinement of two step partitions.
double step_distance(const StepGraphon& a, const StepGraphon& b, double p) {
    std::vector<double> cuts = {0.0, 1.0};
    for (int i = 0; i <= a.blocks(); ++i) cuts.push_back(i == a.blocks() ? 1.0 : a.lower(i));
    for (int i = 0; i <= b.blocks(); ++i) cuts.push_back(i == b.blocks() ? 1.0 : b.lower(i));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const int m = static_cast<int>(cuts.size()) - 1;
    std::vector<double> mid(static_cast<std::size_t>(m)), len(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        mid[static_cast<std::size_t>(i)] = 0.5 * (cuts[static_cast<std::size_t>(i)] + cuts[static_cast<std::size_t>(i) + 1]);
        len[static_cast<std::size_t>(i)] = cuts[static_cast<std::size_t>(i) + 1] - cuts[static_cast<std::size_t>(i)];
    }
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double d = std::abs(a.eval(mid[static_cast<std::size_t>(i)], mid[static_cast<std::size_t>(j)]) -
                                b.eval(mid[static_cast<std::size_t>(i)], mid[static_cast<std::size_t>(j)]));
            acc += len[static_cast<std::size_t>(i)] * len[static_cast<std::size_t>(j)] * std::pow(d, p);
        }
    return std::pow(acc, 1.0 / p);
}

quad::Options quad_options(const Graphon& g, const Graphon* h, const QuadOptions& opt) {
    quad::Options q;
    q.rel_tol = opt.rel_tol;
    q.policy = opt.policy;
    q.singular_origin = g.singular_at_zero() || (h && h->singular_at_zero());
    q.diagonal_kink = g.has_diagonal_kink() || (h && h->has_diagonal_kink());
    auto add_breaks = [&q](const Graphon& x) {
        if (x.kind() == GraphonKind::Step) {
            const StepGraphon& s = x.step_data();
            for (int i = 1; i < s.blocks(); ++i) q.breaks.push_back(s.lower(i));
        }
    };
    add_breaks(g);
    if (h) add_breaks(*h);
    return q;
}

}  // namespace

double lp_norm(const Graphon& g, double p, const QuadOptions& opt) {
    if (!(p >= 1.0)) throw ConfigError("lp_norm requires p >= 1");
    if (!opt.force_quadrature) {
        switch (g.kind()) {
            case GraphonKind::Constant: return g.param();
            case GraphonKind::PowerLaw: {
                double s = g.param() * p;
                if (s >= 1.0)
                    throw DivergentNorm("power_law " + std::to_string(p) + "-norm diverges for a >= " +
                                        std::to_string(1.0 / p));
                return std::pow(1.0 / (1.0 - s), 2.0 / p);
            }
            case GraphonKind::UniformAttachment:
                return std::pow(2.0 / ((p + 1.0) * (p + 2.0)), 1.0 / p);
            case GraphonKind::Product: return std::pow(1.0 / (p + 1.0), 2.0 / p);
            case GraphonKind::Step: return std::pow(step_lp_norm_pow(g.step_data(), p), 1.0 / p);
            case GraphonKind::User: break;
        }
    }
    if (g.kind() == GraphonKind::PowerLaw && g.param() * p >= 1.0)
        throw DivergentNorm("power_law norm diverges");
    quad::Options q = quad_options(g, nullptr, opt);
    double val = quad::integrate_unit_square(
        [&g, p](double x, double y) { return std::pow(std::abs(g.eval(x, y)), p); }, q);
    return std::pow(val, 1.0 / p);
}

double lp_distance(const Graphon& g, const Graphon& h, double p, const QuadOptions& opt) {
    if (!(p >= 1.0)) throw ConfigError("lp_distance requires p >= 1");
    if (!opt.force_quadrature && g.kind() == GraphonKind::Step && h.kind() == GraphonKind::Step)
        return step_distance(g.step_data(), h.step_data(), p);
    quad::Options q = quad_options(g, &h, opt);
    double val = quad::integrate_unit_square(
        [&g, &h, p](double x, double y) { return std::pow(std::abs(g.eval(x, y) - h.eval(x, y)), p); },
        q);
    return std::pow(val, 1.0 / p);
}

StepGraphon graph_to_graphon(const std::vector<std::vector<int>>& adjacency) {
    const int n = static_cast<int>(adjacency.size());
    if (n == 0) throw ConfigError("empty adjacency matrix");
    std::vector<double> values(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(adjacency[static_cast<std::size_t>(i)].size()) != n)
            throw ConfigError("adjacency matrix must be square");
        for (int j = 0; j < n; ++j) {
            int v = adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (v != 0 && v != 1) throw ConfigError("adjacency entries must be 0/1");
            if (i == j && v != 0) throw NonZeroDiagonal("simple graphs have no loops");
            if (v != adjacency[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
                throw NonSymmetric("adjacency matrix");
            values[static_cast<std::size_t>(i) * n + j] = v;
        }
    }
    return StepGraphon::uniform(n, std::move(values));
}

}  // namespace graphsim
