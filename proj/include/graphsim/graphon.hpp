#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphsim/common.hpp"
#include "graphsim/expr.hpp"
#include "graphsim/quadrature.hpp"

#include <nlohmann/json_fwd.hpp>

namespace graphsim {

// Step kernel: constant on a grid of rectangles built from a partition of
// [0,1] into K contiguous intervals.
class StepGraphon {
  public:
    StepGraphon() = default;
    StepGraphon(std::vector<double> lengths, std::vector<double> values);
    static StepGraphon uniform(int blocks, std::vector<double> values);

    int blocks() const { return k_; }
    double length(int i) const { return lengths_[static_cast<std::size_t>(i)]; }
    double lower(int i) const { return bounds_[static_cast<std::size_t>(i)]; }
    double value(int i, int j) const { return values_[static_cast<std::size_t>(i) * k_ + j]; }
    double& value(int i, int j) { return values_[static_cast<std::size_t>(i) * k_ + j]; }
    int block_of(double x) const;
    double eval(double x, double y) const { return value(block_of(x), block_of(y)); }
    double max_value() const;
    const std::vector<double>& lengths() const { return lengths_; }

    StepGraphon shifted(double bump) const;  // all block values + bump

  private:
    int k_ = 0;
    std::vector<double> lengths_;  // K, positive, sum 1
    std::vector<double> bounds_;   // K+1 prefix sums
    std::vector<double> values_;   // K*K row-major, symmetric nonnegative
};

enum class GraphonKind { Constant, PowerLaw, UniformAttachment, Product, Step, User };

// Symmetric nonnegative kernel on [0,1]^2; possibly unbounded but square
// integrable.  Immutable after construction.
class Graphon {
  public:
    static Graphon constant(double c);
    static Graphon power_law(double a);  // (x*y)^{-a}, a in (0, 1/2)
    static Graphon uniform_attachment();  // 1 - max(x,y)
    static Graphon product();             // x*y
    static Graphon step(StepGraphon s);
    static Graphon user(const std::string& expression, bool lipschitz = false,
                        bool singular_at_zero = false);

    double eval(double x, double y) const;
    GraphonKind kind() const { return kind_; }
    double param() const { return param_; }
    const StepGraphon& step_data() const;

    bool singular_at_zero() const { return singular_; }
    bool is_lipschitz() const { return lipschitz_; }
    bool is_bounded() const { return bounded_; }
    double bound() const { return bound_; }  // sup when bounded
    bool has_diagonal_kink() const { return diagonal_kink_; }

    nlohmann::json to_json() const;
    static Graphon from_json(const nlohmann::json& j);

  private:
    Graphon() = default;
    GraphonKind kind_ = GraphonKind::Constant;
    double param_ = 0.0;
    std::optional<StepGraphon> step_;
    expr::Expression expr_;
    bool singular_ = false;
    bool lipschitz_ = false;
    bool bounded_ = true;
    double bound_ = 0.0;
    bool diagonal_kink_ = false;
};

// Uniform grid x_i = i/n, i = 0..n-1.
struct GridSpec {
    int n = 1;
    double point(int i) const { return static_cast<double>(i) / n; }
};

// f_n(x): largest grid point <= x, with the last cell absorbing [x_{n-1}, 1].
double grid_project(double x, const GridSpec& grid);

enum class SingularPolicy { Auto, Reject, MidpointShift, Clamp };

StepGraphon discretize(const Graphon& g, const GridSpec& grid,
                       SingularPolicy policy = SingularPolicy::Auto, double clamp_cap = 1e6);

struct QuadOptions {
    double rel_tol = 1e-8;
    bool force_quadrature = false;  // skip analytic shortcuts (cross-checks)
    ExecPolicy policy = ExecPolicy::Serial;
};

double lp_norm(const Graphon& g, double p, const QuadOptions& opt = {});
double lp_distance(const Graphon& g, const Graphon& h, double p, const QuadOptions& opt = {});

// Equal-block step graphon of a simple graph: 1 on blocks with an edge.
StepGraphon graph_to_graphon(const std::vector<std::vector<int>>& adjacency);

}  // namespace graphsim
