#include "graphsim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace graphsim::quad {

namespace {

constexpr int kPointsPerAxis = 16;

struct Rule {
    std::vector<double> x, w;
};

const Rule& rule(int n) {
    static std::map<int, Rule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    // Newton iteration on Legendre polynomials, roots on [-1,1].
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        r.w[i] = w;
        r.w[n - 1 - i] = w;
    }
    // map to [0,1]
    for (int i = 0; i < n; ++i) {
        r.x[i] = 0.5 * (r.x[i] + 1.0);
        r.w[i] *= 0.5;
    }
    return cache.emplace(n, std::move(r)).first->second;
}

std::vector<double> build_axis(const Options& opt, int level) {
    std::vector<double> base = {0.0, 1.0};
    for (double b : opt.breaks)
        if (b > 0.0 && b < 1.0) base.push_back(b);
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());

    std::vector<double> pts;
    pts.push_back(0.0);
    if (opt.singular_origin) {
        // dyadic ladder inside the first base panel, deepened per level
        int depth = 40 * (level + 1);
        double b1 = base[1];
        for (int j = depth; j >= 1; --j) pts.push_back(b1 * std::ldexp(1.0, -j));
    }
    int split = 1 << level;
    for (std::size_t k = 1; k < base.size(); ++k) {
        double a = base[k - 1], b = base[k];
        if (opt.singular_origin && k == 1) {
            pts.push_back(b);
            continue;  // ladder already covers it
        }
        for (int s = 1; s <= split; ++s) pts.push_back(a + (b - a) * s / split);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

double integrate_level(const std::function<double(double, double)>& f, const Options& opt,
                       int level) {
    const std::vector<double> axis = build_axis(opt, level);
    const Rule& gl = rule(kPointsPerAxis);
    const int P = static_cast<int>(axis.size()) - 1;
    const int ncells = P * P;
    std::vector<double> partial(static_cast<std::size_t>(ncells), 0.0);

    auto cell_value = [&](int ci) {
        int i = ci / P, j = ci % P;
        double a = axis[i], b = axis[i + 1];
        double c = axis[j], d = axis[j + 1];
        double hx = b - a, hy = d - c;
        if (opt.diagonal_kink && i == j) {
            // identical axis partitions put the diagonal through square cells
            // only; integrate the two triangles with a Duffy map each.
            double h = hx, sum = 0.0;
            for (int p = 0; p < kPointsPerAxis; ++p) {
                for (int q = 0; q < kPointsPerAxis; ++q) {
                    double u = gl.x[p], v = gl.x[q];
                    double wgt = gl.w[p] * gl.w[q] * h * h * u;
                    sum += wgt * f(a + h * u, a + h * u * v);  // lower: y <= x
                    sum += wgt * f(a + h * u * v, a + h * u);  // upper: x <= y
                }
            }
            return sum;
        }
        double sum = 0.0;
        for (int p = 0; p < kPointsPerAxis; ++p) {
            double x = a + hx * gl.x[p];
            double wx = gl.w[p] * hx;
            for (int q = 0; q < kPointsPerAxis; ++q)
                sum += wx * gl.w[q] * hy * f(x, c + hy * gl.x[q]);
        }
        return sum;
    };

    for_indices(ncells, opt.policy, [&](int ci) { partial[static_cast<std::size_t>(ci)] = cell_value(ci); });
    return neumaier_sum(partial.data(), partial.size());
}

}  // namespace

void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    const Rule& r = rule(n);
    nodes = r.x;
    weights = r.w;
}

double integrate_unit_square(const std::function<double(double, double)>& f, const Options& opt) {
    double prev = integrate_level(f, opt, 0);
    for (int level = 1; level <= opt.max_level; ++level) {
        double cur = integrate_level(f, opt, level);
        if (std::abs(cur - prev) <= opt.rel_tol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    throw NumericalError("quadrature did not reach tolerance " + std::to_string(opt.rel_tol));
}

}  // namespace graphsim::quad
