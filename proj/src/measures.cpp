#include "graphsim/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "graphsim/rng.hpp"

namespace graphsim {

void DiscreteMeasure::push(const double* x, double weight) {
    if (weight < 0.0) throw ConfigError("measure weights must be nonnegative");
    pts.insert(pts.end(), x, x + dim);
    w.push_back(weight);
}

double DiscreteMeasure::total_mass() const {
    return std::accumulate(w.begin(), w.end(), 0.0);
}

std::vector<double> DiscreteMeasure::first_moment() const {
    std::vector<double> m(static_cast<std::size_t>(dim), 0.0);
    for (int k = 0; k < atoms(); ++k)
        for (int d = 0; d < dim; ++d) m[static_cast<std::size_t>(d)] += w[static_cast<std::size_t>(k)] * atom(k)[d];
    return m;
}

double DiscreteMeasureView::total_mass() const { return m_.total_mass(); }

double DiscreteMeasureView::first_moment(int component) const {
    double acc = 0.0;
    for (int k = 0; k < m_.atoms(); ++k) acc += m_.w[static_cast<std::size_t>(k)] * m_.atom(k)[component];
    return acc;
}

double DiscreteMeasureView::sin_moment() const {
    if (m_.dim != 1) throw WrongDimension("sin_moment needs dim 1");
    double acc = 0.0;
    for (int k = 0; k < m_.atoms(); ++k) acc += m_.w[static_cast<std::size_t>(k)] * std::sin(m_.atom(k)[0]);
    return acc;
}

double DiscreteMeasureView::cos_moment() const {
    if (m_.dim != 1) throw WrongDimension("cos_moment needs dim 1");
    double acc = 0.0;
    for (int k = 0; k < m_.atoms(); ++k) acc += m_.w[static_cast<std::size_t>(k)] * std::cos(m_.atom(k)[0]);
    return acc;
}

DiscreteMeasure weighted_empirical(const InteractionGraph& graph, int i,
                                   const std::vector<double>& states, int dim) {
    if (static_cast<int>(states.size()) != graph.n() * dim)
        throw DimensionMismatch("states array must hold N * dim values");
    DiscreteMeasure m;
    m.dim = dim;
    const double scale = 1.0 / (graph.n() * graph.beta());
    m.pts.reserve(static_cast<std::size_t>(graph.row_size(i)) * dim);
    m.w.reserve(static_cast<std::size_t>(graph.row_size(i)));
    graph.for_row(i, [&](int j, double zeta) {
        if (zeta == 0.0) return;
        m.push(states.data() + static_cast<std::size_t>(j) * dim, zeta * scale);
    });
    return m;
}

DiscreteMeasure graphon_integral_measure(const StepGraphon& g_n, double x,
                                         const std::vector<DiscreteMeasure>& block_laws) {
    if (static_cast<int>(block_laws.size()) != g_n.blocks())
        throw DimensionMismatch("need one block law per block");
    DiscreteMeasure out;
    out.dim = block_laws.empty() ? 1 : block_laws[0].dim;
    const int bx = g_n.block_of(x);
    for (int j = 0; j < g_n.blocks(); ++j) {
        const DiscreteMeasure& law = block_laws[static_cast<std::size_t>(j)];
        if (law.dim != out.dim) throw DimensionMismatch("block laws disagree on dimension");
        double factor = g_n.length(j) * g_n.value(bx, j);
        if (factor == 0.0) continue;
        for (int k = 0; k < law.atoms(); ++k) out.push(law.atom(k), factor * law.w[static_cast<std::size_t>(k)]);
    }
    return out;
}

namespace {

double dist(const double* a, const double* b, int dim) {
    double acc = 0.0;
    for (int d = 0; d < dim; ++d) acc += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(acc);
}

// Union support with signed net weights; atoms closer than 1e-12 merged.
struct SignedSupport {
    int dim = 1;
    std::vector<double> pts;
    std::vector<double> a;  // mu weight - nu weight
    int size() const { return static_cast<int>(a.size()); }
    const double* at(int k) const { return pts.data() + static_cast<std::size_t>(k) * dim; }
};

SignedSupport merge_supports(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim != nu.dim) throw DimensionMismatch("measures live in different dimensions");
    SignedSupport s;
    s.dim = mu.dim;
    auto add = [&s](const double* x, double signed_w) {
        for (int k = 0; k < s.size(); ++k) {
            if (dist(s.at(k), x, s.dim) < 1e-12) {
                s.a[static_cast<std::size_t>(k)] += signed_w;
                return;
            }
        }
        s.pts.insert(s.pts.end(), x, x + s.dim);
        s.a.push_back(signed_w);
    };
    for (int k = 0; k < mu.atoms(); ++k) add(mu.atom(k), mu.w[static_cast<std::size_t>(k)]);
    for (int k = 0; k < nu.atoms(); ++k) add(nu.atom(k), -nu.w[static_cast<std::size_t>(k)]);
    return s;
}

// Dual of the bounded-Lipschitz LP: a transportation problem from positive
// excesses to negative ones with cost min(distance, 2) plus a unit-cost
// bank/waste pair absorbing the imbalance.  Solved exactly by successive
// shortest paths with potentials.
double transport_value(const SignedSupport& s) {
    std::vector<int> src, snk;
    std::vector<double> supply, demand;
    for (int k = 0; k < s.size(); ++k) {
        if (s.a[static_cast<std::size_t>(k)] > 0.0) {
            src.push_back(k);
            supply.push_back(s.a[static_cast<std::size_t>(k)]);
        } else if (s.a[static_cast<std::size_t>(k)] < 0.0) {
            snk.push_back(k);
            demand.push_back(-s.a[static_cast<std::size_t>(k)]);
        }
    }
    const int P = static_cast<int>(src.size());
    const int Q = static_cast<int>(snk.size());
    if (P == 0 && Q == 0) return 0.0;
    const double total_supply = std::accumulate(supply.begin(), supply.end(), 0.0);
    const double total_demand = std::accumulate(demand.begin(), demand.end(), 0.0);
    // row P = bank (creates mass at cost 1), column Q = waste (destroys at 1)
    supply.push_back(total_demand);
    demand.push_back(total_supply);
    const int R = P + 1, C = Q + 1;

    auto cost = [&](int r, int c) -> double {
        if (r == P && c == Q) return 0.0;
        if (r == P || c == Q) return 1.0;
        return std::min(dist(s.at(src[static_cast<std::size_t>(r)]), s.at(snk[static_cast<std::size_t>(c)]), s.dim), 2.0);
    };

    std::vector<double> flow(static_cast<std::size_t>(R) * C, 0.0);
    std::vector<double> pot_r(static_cast<std::size_t>(R), 0.0), pot_c(static_cast<std::size_t>(C), 0.0);
    std::vector<double> rem_s = supply, rem_d = demand;
    const double total = total_supply + total_demand;
    const double eps = 1e-13 * (1.0 + total);
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> dist_r(static_cast<std::size_t>(R)), dist_c(static_cast<std::size_t>(C));
    std::vector<int> par_c(static_cast<std::size_t>(C)), par_r(static_cast<std::size_t>(R));
    std::vector<char> done_r(static_cast<std::size_t>(R)), done_c(static_cast<std::size_t>(C));

    double remaining = total;
    long iterations = 0;
    const long max_iterations = 100 + 50L * (R + C);
    while (remaining > eps) {
        if (++iterations > max_iterations)
            throw NumericalError("transportation solve exceeded iteration budget");
        // Dijkstra with reduced costs, run to completion so the potential
        // update below keeps every residual arc nonnegative.
        std::fill(dist_r.begin(), dist_r.end(), inf);
        std::fill(dist_c.begin(), dist_c.end(), inf);
        std::fill(par_c.begin(), par_c.end(), -1);
        std::fill(par_r.begin(), par_r.end(), -1);
        std::fill(done_r.begin(), done_r.end(), 0);
        std::fill(done_c.begin(), done_c.end(), 0);
        for (int r = 0; r < R; ++r)
            if (rem_s[static_cast<std::size_t>(r)] > eps) dist_r[static_cast<std::size_t>(r)] = 0.0;

        for (;;) {
            int r_pick = -1, c_pick = -1;
            double best = inf;
            for (int r = 0; r < R; ++r)
                if (!done_r[static_cast<std::size_t>(r)] && dist_r[static_cast<std::size_t>(r)] < best) {
                    best = dist_r[static_cast<std::size_t>(r)];
                    r_pick = r;
                    c_pick = -1;
                }
            for (int c = 0; c < C; ++c)
                if (!done_c[static_cast<std::size_t>(c)] && dist_c[static_cast<std::size_t>(c)] < best) {
                    best = dist_c[static_cast<std::size_t>(c)];
                    c_pick = c;
                    r_pick = -1;
                }
            if (r_pick < 0 && c_pick < 0) break;
            if (r_pick >= 0) {
                done_r[static_cast<std::size_t>(r_pick)] = 1;
                for (int c = 0; c < C; ++c) {  // forward arcs, uncapacitated
                    if (done_c[static_cast<std::size_t>(c)]) continue;
                    double rc = cost(r_pick, c) + pot_r[static_cast<std::size_t>(r_pick)] - pot_c[static_cast<std::size_t>(c)];
                    double nd = dist_r[static_cast<std::size_t>(r_pick)] + std::max(rc, 0.0);
                    if (nd < dist_c[static_cast<std::size_t>(c)]) {
                        dist_c[static_cast<std::size_t>(c)] = nd;
                        par_c[static_cast<std::size_t>(c)] = r_pick;
                    }
                }
            } else {
                done_c[static_cast<std::size_t>(c_pick)] = 1;
                for (int r = 0; r < R; ++r) {  // residual back arcs
                    if (done_r[static_cast<std::size_t>(r)]) continue;
                    if (flow[static_cast<std::size_t>(r) * C + c_pick] <= eps) continue;
                    double rc = -(cost(r, c_pick) + pot_r[static_cast<std::size_t>(r)] - pot_c[static_cast<std::size_t>(c_pick)]);
                    double nd = dist_c[static_cast<std::size_t>(c_pick)] + std::max(rc, 0.0);
                    if (nd < dist_r[static_cast<std::size_t>(r)]) {
                        dist_r[static_cast<std::size_t>(r)] = nd;
                        par_r[static_cast<std::size_t>(r)] = c_pick;
                    }
                }
            }
        }

        int best_sink = -1;
        for (int c = 0; c < C; ++c)
            if (rem_d[static_cast<std::size_t>(c)] > eps && dist_c[static_cast<std::size_t>(c)] < inf &&
                (best_sink < 0 || dist_c[static_cast<std::size_t>(c)] < dist_c[static_cast<std::size_t>(best_sink)]))
                best_sink = c;
        if (best_sink < 0) throw NumericalError("transportation solve lost feasibility");

        // bottleneck along the alternating path
        double push = rem_d[static_cast<std::size_t>(best_sink)];
        for (int c = best_sink;;) {
            int r = par_c[static_cast<std::size_t>(c)];
            int c_prev = par_r[static_cast<std::size_t>(r)];
            if (c_prev < 0) {
                push = std::min(push, rem_s[static_cast<std::size_t>(r)]);
                break;
            }
            push = std::min(push, flow[static_cast<std::size_t>(r) * C + c_prev]);
            c = c_prev;
        }
        for (int c = best_sink;;) {
            int r = par_c[static_cast<std::size_t>(c)];
            flow[static_cast<std::size_t>(r) * C + c] += push;
            int c_prev = par_r[static_cast<std::size_t>(r)];
            if (c_prev < 0) {
                rem_s[static_cast<std::size_t>(r)] -= push;
                break;
            }
            flow[static_cast<std::size_t>(r) * C + c_prev] -= push;
            c = c_prev;
        }
        rem_d[static_cast<std::size_t>(best_sink)] -= push;
        remaining -= 2.0 * push;

        // Johnson potential update; unreached nodes move by the largest
        // finite label so no residual arc goes negative.
        double dmax = 0.0;
        for (int r = 0; r < R; ++r)
            if (dist_r[static_cast<std::size_t>(r)] < inf) dmax = std::max(dmax, dist_r[static_cast<std::size_t>(r)]);
        for (int c = 0; c < C; ++c)
            if (dist_c[static_cast<std::size_t>(c)] < inf) dmax = std::max(dmax, dist_c[static_cast<std::size_t>(c)]);
        for (int r = 0; r < R; ++r)
            pot_r[static_cast<std::size_t>(r)] +=
                dist_r[static_cast<std::size_t>(r)] < inf ? dist_r[static_cast<std::size_t>(r)] : dmax;
        for (int c = 0; c < C; ++c)
            pot_c[static_cast<std::size_t>(c)] +=
                dist_c[static_cast<std::size_t>(c)] < inf ? dist_c[static_cast<std::size_t>(c)] : dmax;
    }

    double value = 0.0;
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
            if (flow[static_cast<std::size_t>(r) * C + c] > 0.0) value += flow[static_cast<std::size_t>(r) * C + c] * cost(r, c);
    return value;
}

}  // namespace

double dbl_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DblOptions& opt) {
    if (mu.dim != nu.dim) throw DimensionMismatch("measures live in different dimensions");
    if (mu.atoms() + nu.atoms() > opt.max_support)
        throw SupportTooLarge("combined support " + std::to_string(mu.atoms() + nu.atoms()) +
                              " exceeds cap " + std::to_string(opt.max_support) +
                              "; use dbl_estimate or subsample");
    SignedSupport s = merge_supports(mu, nu);
    return std::max(transport_value(s), 0.0);
}

double dbl_estimate(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                    const DictionaryOptions& opt) {
    if (mu.dim != nu.dim) throw DimensionMismatch("measures live in different dimensions");
    const int dim = mu.dim;
    auto pair_diff = [&](auto&& f) {
        double acc = 0.0;
        for (int k = 0; k < mu.atoms(); ++k) acc += mu.w[static_cast<std::size_t>(k)] * f(mu.atom(k));
        for (int k = 0; k < nu.atoms(); ++k) acc -= nu.w[static_cast<std::size_t>(k)] * f(nu.atom(k));
        return acc;
    };
    auto clip = [](double v) { return std::clamp(v, -1.0, 1.0); };

    double best = std::abs(pair_diff([](const double*) { return 1.0; }));  // f = +-1

    // pooled support statistics for centering
    std::vector<double> center(static_cast<std::size_t>(dim), 0.0);
    int total_atoms = mu.atoms() + nu.atoms();
    if (total_atoms == 0) return 0.0;
    for (int k = 0; k < mu.atoms(); ++k)
        for (int d = 0; d < dim; ++d) center[static_cast<std::size_t>(d)] += mu.atom(k)[d];
    for (int k = 0; k < nu.atoms(); ++k)
        for (int d = 0; d < dim; ++d) center[static_cast<std::size_t>(d)] += nu.atom(k)[d];
    for (int d = 0; d < dim; ++d) center[static_cast<std::size_t>(d)] /= total_atoms;

    // clipped affine functionals along random unit directions
    for (int t = 0; t < opt.directions; ++t) {
        std::vector<double> u(static_cast<std::size_t>(dim));
        double norm = 0.0;
        for (int d = 0; d < dim; ++d) {
            u[static_cast<std::size_t>(d)] = rng::normal01(opt.seed, rng::Domain::Dictionary,
                                                           static_cast<uint64_t>(t), static_cast<uint32_t>(d));
            norm += u[static_cast<std::size_t>(d)] * u[static_cast<std::size_t>(d)];
        }
        norm = std::sqrt(std::max(norm, 1e-300));
        auto f = [&](const double* x) {
            double v = 0.0;
            for (int d = 0; d < dim; ++d)
                v += u[static_cast<std::size_t>(d)] / norm * (x[d] - center[static_cast<std::size_t>(d)]);
            return clip(v);
        };
        best = std::max(best, std::abs(pair_diff(f)));
    }

    // clipped distance-to-anchor functions, anchors drawn from the pool
    for (int t = 0; t < opt.anchors; ++t) {
        double u = rng::uniform01(opt.seed, rng::Domain::Dictionary, 1000 + static_cast<uint64_t>(t));
        int pick = std::min(static_cast<int>(u * total_atoms), total_atoms - 1);
        const double* z = pick < mu.atoms() ? mu.atom(pick) : nu.atom(pick - mu.atoms());
        auto f = [&](const double* x) { return 1.0 - std::min(dist(x, z, dim), 2.0); };
        best = std::max(best, std::abs(pair_diff(f)));
    }
    return best;
}

double w1_sorted(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim != 1 || nu.dim != 1) throw WrongDimension("w1_sorted handles dim 1 only");
    double mm = mu.total_mass(), nm = nu.total_mass();
    if (std::abs(mm - nm) > 1e-12)
        throw MassMismatch("w1_sorted needs equal masses, got " + std::to_string(mm) + " vs " +
                           std::to_string(nm));
    struct P {
        double x, w;
        int side;
    };
    std::vector<P> all;
    for (int k = 0; k < mu.atoms(); ++k) all.push_back({mu.atom(k)[0], mu.w[static_cast<std::size_t>(k)], 0});
    for (int k = 0; k < nu.atoms(); ++k) all.push_back({nu.atom(k)[0], nu.w[static_cast<std::size_t>(k)], 1});
    std::sort(all.begin(), all.end(), [](const P& a, const P& b) { return a.x < b.x; });
    // W1 = integral of |F_mu - F_nu|
    double acc = 0.0, fmu = 0.0, fnu = 0.0;
    for (std::size_t k = 0; k + 1 <= all.size(); ++k) {
        if (all[k].side == 0)
            fmu += all[k].w;
        else
            fnu += all[k].w;
        if (k + 1 < all.size()) acc += std::abs(fmu - fnu) * (all[k + 1].x - all[k].x);
    }
    return acc;
}

DiscreteMeasure subsample_measure(const DiscreteMeasure& m, int cap, uint64_t seed, uint64_t key) {
    if (m.atoms() <= cap) return m;
    // weighted reservoir (A-Res): keep the cap atoms with the largest
    // u^(1/w); each kept atom carries mass total/cap
    std::vector<std::pair<double, int>> keys(static_cast<std::size_t>(m.atoms()));
    for (int k = 0; k < m.atoms(); ++k) {
        double u = rng::uniform01(seed, rng::Domain::Subsample, key, static_cast<uint32_t>(k));
        double wt = std::max(m.w[static_cast<std::size_t>(k)], 1e-300);
        keys[static_cast<std::size_t>(k)] = {std::log(u) / wt, k};
    }
    std::partial_sort(keys.begin(), keys.begin() + cap, keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<int> chosen(static_cast<std::size_t>(cap));
    for (int k = 0; k < cap; ++k) chosen[static_cast<std::size_t>(k)] = keys[static_cast<std::size_t>(k)].second;
    std::sort(chosen.begin(), chosen.end());
    DiscreteMeasure out;
    out.dim = m.dim;
    double share = m.total_mass() / cap;
    for (int k : chosen) out.push(m.atom(k), share);
    return out;
}

std::string measure_to_text(const DiscreteMeasure& m) {
    std::string out = "dim " + std::to_string(m.dim) + "\n";
    char buf[64];
    for (int k = 0; k < m.atoms(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", m.w[static_cast<std::size_t>(k)]);
        out += buf;
        for (int d = 0; d < m.dim; ++d) {
            std::snprintf(buf, sizeof buf, " %.17g", m.atom(k)[d]);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

DiscreteMeasure measure_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string tag;
    DiscreteMeasure m;
    if (!(in >> tag >> m.dim) || tag != "dim") throw ConfigError("measure text must start with 'dim n'");
    if (m.dim < 1 || m.dim > 16) throw ConfigError("unsupported measure dimension");
    double w;
    std::vector<double> x(static_cast<std::size_t>(m.dim));
    while (in >> w) {
        for (int d = 0; d < m.dim; ++d)
            if (!(in >> x[static_cast<std::size_t>(d)])) throw ConfigError("truncated measure atom line");
        m.push(x.data(), w);
    }
    return m;
}

}  // namespace graphsim
