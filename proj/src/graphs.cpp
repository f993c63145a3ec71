#include "graphsim/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "graphsim/rng.hpp"

namespace graphsim {

using nlohmann::json;

std::string to_string(GraphMode m) {
    switch (m) {
        case GraphMode::DirectedIndependent: return "directed";
        case GraphMode::SymmetricSimple: return "symmetric";
        case GraphMode::Deterministic: return "deterministic";
    }
    return "symmetric";
}

GraphMode graph_mode_from_string(const std::string& s) {
    if (s == "directed" || s == "directed-independent") return GraphMode::DirectedIndependent;
    if (s == "symmetric" || s == "symmetric-simple") return GraphMode::SymmetricSimple;
    if (s == "deterministic") return GraphMode::Deterministic;
    throw ConfigError("unknown graph mode '" + s + "'");
}

double InteractionGraph::weight(int i, int j) const {
    auto lo = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[static_cast<std::size_t>(i)]);
    auto hi = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[static_cast<std::size_t>(i) + 1]);
    auto it = std::lower_bound(lo, hi, j);
    if (it == hi || *it != j) return 0.0;
    return weights_[static_cast<std::size_t>(it - cols_.begin())];
}

namespace {

double edge_probability(const Graphon& g, double beta, double xi, double xj) {
    double p = beta * g.eval(xi, xj);
    if (std::isnan(p)) throw NumericalError("edge probability is NaN");
    return std::clamp(p, 0.0, 1.0);  // beta*g > 1 (or inf) clamps to 1
}

}  // namespace

InteractionGraph sample_w_random(const Graphon& g, int n, double beta, GraphMode mode,
                                 uint64_t seed, ExecPolicy policy) {
    if (n < 1) throw ConfigError("graph needs at least one vertex");
    GridSpec grid{n};
    std::vector<double> points(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) points[static_cast<std::size_t>(i)] = grid.point(i);
    return sample_w_random(g, points, beta, mode, seed, policy);
}

InteractionGraph sample_w_random(const Graphon& g, const std::vector<double>& points, double beta,
                                 GraphMode mode, uint64_t seed, ExecPolicy policy) {
    const int n = static_cast<int>(points.size());
    if (!(beta > 0.0) || !(beta <= 1.0)) throw ConfigError("beta must lie in (0,1]");
    if (n < 1) throw ConfigError("graph needs at least one vertex");
    if (mode == GraphMode::Deterministic)
        throw ConfigError("use deterministic_graph for deterministic weights");

    std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
    if (mode == GraphMode::DirectedIndependent) {
        for_indices(n, policy, [&](int i) {
            double xi = points[static_cast<std::size_t>(i)];
            auto& row = rows[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;  // no loops
                double p = edge_probability(g, beta, xi, points[static_cast<std::size_t>(j)]);
                double u = rng::uniform01(seed, rng::Domain::GraphSample,
                                          static_cast<uint64_t>(i), static_cast<uint32_t>(j), 0);
                if (u < p) row.push_back(j);
            }
        });
    } else {
        // draw i<j once; mirror afterwards so the matrix is exactly symmetric
        for_indices(n, policy, [&](int i) {
            double xi = points[static_cast<std::size_t>(i)];
            auto& row = rows[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < n; ++j) {
                double p = edge_probability(g, beta, xi, points[static_cast<std::size_t>(j)]);
                double u = rng::uniform01(seed, rng::Domain::GraphSample,
                                          static_cast<uint64_t>(i), static_cast<uint32_t>(j), 0);
                if (u < p) row.push_back(j);
            }
        });
        std::vector<std::vector<int>> mirrored(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int j : rows[static_cast<std::size_t>(i)]) mirrored[static_cast<std::size_t>(j)].push_back(i);
        for (int i = 0; i < n; ++i) {
            auto& m = mirrored[static_cast<std::size_t>(i)];
            auto& r = rows[static_cast<std::size_t>(i)];
            r.insert(r.begin(), m.begin(), m.end());  // mirrored entries have j < i
        }
    }

    InteractionGraph out;
    out.n_ = n;
    out.beta_ = beta;
    out.mode_ = mode;
    out.row_ptr_.resize(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i)
        out.row_ptr_[static_cast<std::size_t>(i) + 1] =
            out.row_ptr_[static_cast<std::size_t>(i)] + rows[static_cast<std::size_t>(i)].size();
    out.cols_.reserve(out.row_ptr_.back());
    out.weights_.reserve(out.row_ptr_.back());
    for (int i = 0; i < n; ++i)
        for (int j : rows[static_cast<std::size_t>(i)]) {
            out.cols_.push_back(j);
            out.weights_.push_back(1.0);
        }
    return out;
}

InteractionGraph deterministic_graph(const StepGraphon& g_n, int n, double beta) {
    if (!(beta > 0.0) || !(beta <= 1.0)) throw ConfigError("beta must lie in (0,1]");
    GridSpec grid{n};
    // precondition: beta * g_N(x_i, x_j) <= 1 at every grid pair
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            worst = std::max(worst, g_n.eval(grid.point(i), grid.point(j)));
    if (beta * worst > 1.0 + 1e-15)
        throw WeightExceedsOne("beta * g_N = " + std::to_string(beta * worst) + " at some grid pair");

    InteractionGraph out;
    out.n_ = n;
    out.beta_ = beta;
    out.mode_ = GraphMode::Deterministic;
    out.row_ptr_.resize(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> blocks(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) blocks[static_cast<std::size_t>(i)] = g_n.block_of(grid.point(i));
    for (int i = 0; i < n; ++i) {
        std::size_t count = 0;
        for (int j = 0; j < n; ++j)
            if (g_n.value(blocks[static_cast<std::size_t>(i)], blocks[static_cast<std::size_t>(j)]) != 0.0) ++count;
        out.row_ptr_[static_cast<std::size_t>(i) + 1] = out.row_ptr_[static_cast<std::size_t>(i)] + count;
    }
    out.cols_.reserve(out.row_ptr_.back());
    out.weights_.reserve(out.row_ptr_.back());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = g_n.value(blocks[static_cast<std::size_t>(i)], blocks[static_cast<std::size_t>(j)]);
            if (v != 0.0) {
                out.cols_.push_back(j);
                out.weights_.push_back(beta * v);
            }
        }
    return out;
}

std::vector<double> sample_random_points(int n, uint64_t seed) {
    if (n < 2) throw ConfigError("need at least two points");
    std::vector<double> pts(static_cast<std::size_t>(n) + 1);
    pts[0] = 0.0;
    pts[static_cast<std::size_t>(n)] = 1.0;
    for (int i = 1; i < n; ++i)
        pts[static_cast<std::size_t>(i)] =
            rng::uniform01(seed, rng::Domain::Points, static_cast<uint64_t>(i));
    std::sort(pts.begin() + 1, pts.begin() + n);
    return pts;
}

GraphStats graph_stats(const InteractionGraph& g) {
    GraphStats s;
    const int n = g.n();
    s.degrees.resize(static_cast<std::size_t>(n), 0.0);
    double off_diag = 0.0;
    double p1 = 0.0, p2 = 0.0, p4 = 0.0;
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        g.for_row(i, [&](int j, double w) {
            deg += w;
            if (j != i) off_diag += w;
            p1 += w;
            p2 += w * w;
            p4 += w * w * w * w;
        });
        s.degrees[static_cast<std::size_t>(i)] = deg;
        s.mean_degree += deg;
    }
    s.mean_degree /= n;
    double nn = static_cast<double>(n) * n;
    s.edge_density = n > 1 ? off_diag / (static_cast<double>(n) * (n - 1)) : 0.0;
    s.norm1 = p1 / nn;
    s.norm2 = std::sqrt(p2 / nn);
    s.norm4 = std::pow(p4 / nn, 0.25);
    return s;
}

std::string InteractionGraph::serialize() const {
    std::string out;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d %.17g %s\n", n_, beta_, to_string(mode_).c_str());
    out += buf;
    for (int i = 0; i < n_; ++i)
        for_row(i, [&](int j, double w) {
            std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, j, w);
            out += buf;
        });
    return out;
}

InteractionGraph InteractionGraph::deserialize(const std::string& text) {
    std::istringstream in(text);
    InteractionGraph g;
    std::string mode;
    if (!(in >> g.n_ >> g.beta_ >> mode)) throw ConfigError("bad graph header");
    g.mode_ = graph_mode_from_string(mode);
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(g.n_));
    int i, j;
    double w;
    while (in >> i >> j >> w) {
        if (i < 0 || i >= g.n_ || j < 0 || j >= g.n_) throw ConfigError("graph entry out of range");
        rows[static_cast<std::size_t>(i)].emplace_back(j, w);
    }
    g.row_ptr_.resize(static_cast<std::size_t>(g.n_) + 1, 0);
    for (int r = 0; r < g.n_; ++r) {
        std::sort(rows[static_cast<std::size_t>(r)].begin(), rows[static_cast<std::size_t>(r)].end());
        g.row_ptr_[static_cast<std::size_t>(r) + 1] =
            g.row_ptr_[static_cast<std::size_t>(r)] + rows[static_cast<std::size_t>(r)].size();
    }
    for (int r = 0; r < g.n_; ++r)
        for (auto& [c, wt] : rows[static_cast<std::size_t>(r)]) {
            g.cols_.push_back(c);
            g.weights_.push_back(wt);
        }
    return g;
}

double SparsitySchedule::beta(int n) const {
    switch (form) {
        case Form::Constant: return beta0;
        case Form::Power: return std::pow(static_cast<double>(n), -gamma);
        case Form::PowerLawRegime: return std::pow(static_cast<double>(n), b - 2.0 * a);
    }
    return beta0;
}

double SparsitySchedule::exponent() const {
    switch (form) {
        case Form::Constant: return 0.0;
        case Form::Power: return -gamma;
        case Form::PowerLawRegime: return b - 2.0 * a;
    }
    return 0.0;
}

json SparsitySchedule::to_json() const {
    json j;
    switch (form) {
        case Form::Constant:
            j["form"] = "constant";
            j["beta"] = beta0;
            break;
        case Form::Power:
            j["form"] = "power";
            j["gamma"] = gamma;
            break;
        case Form::PowerLawRegime:
            j["form"] = "power_law_regime";
            j["a"] = a;
            j["b"] = b;
            break;
    }
    return j;
}

SparsitySchedule SparsitySchedule::from_json(const json& j) {
    SparsitySchedule s;
    std::string form = j.at("form").get<std::string>();
    if (form == "constant") {
        s.form = Form::Constant;
        s.beta0 = j.at("beta").get<double>();
    } else if (form == "power") {
        s.form = Form::Power;
        s.gamma = j.at("gamma").get<double>();
    } else if (form == "power_law_regime") {
        s.form = Form::PowerLawRegime;
        s.a = j.at("a").get<double>();
        s.b = j.at("b").get<double>();
        if (!(s.b > 2.0 * s.a - 1.0 && s.b < 2.0 * s.a))
            throw ConfigError("power_law_regime requires b in (2a-1, 2a)");
    } else {
        throw ConfigError("unknown sparsity schedule '" + form + "'");
    }
    return s;
}

}  // namespace graphsim
