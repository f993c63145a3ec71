#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphsim/common.hpp"
#include "graphsim/graphon.hpp"

#include <nlohmann/json_fwd.hpp>

namespace graphsim {

enum class GraphMode { DirectedIndependent, SymmetricSimple, Deterministic };

std::string to_string(GraphMode m);
GraphMode graph_mode_from_string(const std::string& s);

// Interaction weights zeta_ij stored in CSR form, rows sorted.  Sampled
// graphs hold 0/1 entries with zero diagonal; deterministic graphs hold
// beta * g_N(x_i, x_j) including the diagonal.
class InteractionGraph {
  public:
    InteractionGraph() = default;

    int n() const { return n_; }
    double beta() const { return beta_; }
    GraphMode mode() const { return mode_; }
    std::size_t nnz() const { return cols_.size(); }

    template <class F>
    void for_row(int i, F&& f) const {
        for (std::size_t k = row_ptr_[static_cast<std::size_t>(i)];
             k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
            f(cols_[k], weights_[k]);
    }
    int row_size(int i) const {
        return static_cast<int>(row_ptr_[static_cast<std::size_t>(i) + 1] -
                                row_ptr_[static_cast<std::size_t>(i)]);
    }
    double weight(int i, int j) const;

    std::string serialize() const;
    static InteractionGraph deserialize(const std::string& text);

  private:
    friend InteractionGraph sample_w_random(const Graphon&, const std::vector<double>&, double,
                                            GraphMode, uint64_t, ExecPolicy);
    friend InteractionGraph deterministic_graph(const StepGraphon&, int, double);

    int n_ = 0;
    double beta_ = 1.0;
    GraphMode mode_ = GraphMode::SymmetricSimple;
    std::vector<std::size_t> row_ptr_;
    std::vector<int> cols_;
    std::vector<double> weights_;
};

// W-random graph: entry (i,j) ~ Bernoulli(min(beta * g(x_i, x_j), 1)) on the
// grid x_i = i/n.  Symmetric mode draws i<j once and mirrors; directed mode
// draws every ordered pair; both force a zero diagonal.
InteractionGraph sample_w_random(const Graphon& g, int n, double beta, GraphMode mode,
                                 uint64_t seed, ExecPolicy policy = ExecPolicy::Serial);

// Same sampler at explicit (e.g. random) points instead of the uniform grid.
InteractionGraph sample_w_random(const Graphon& g, const std::vector<double>& points, double beta,
                                 GraphMode mode, uint64_t seed,
                                 ExecPolicy policy = ExecPolicy::Serial);

// zeta_ij = beta * g_N(x_i, x_j) exactly, diagonal kept.
InteractionGraph deterministic_graph(const StepGraphon& g_n, int n, double beta);

// Ordered points 0 = U_1 < U_2 < ... < U_N < U_{N+1} = 1 with the interior
// points iid uniform; returns N+1 values.
std::vector<double> sample_random_points(int n, uint64_t seed);

struct GraphStats {
    std::vector<double> degrees;
    double mean_degree = 0.0;
    double edge_density = 0.0;           // off-diagonal mass / (n(n-1))
    double norm1 = 0.0, norm2 = 0.0, norm4 = 0.0;  // ||G||_p
};

GraphStats graph_stats(const InteractionGraph& g);

// beta_N as a function of N.
struct SparsitySchedule {
    enum class Form { Constant, Power, PowerLawRegime };
    Form form = Form::Constant;
    double beta0 = 1.0;   // Constant
    double gamma = 0.0;   // Power: beta = N^-gamma
    double a = 0.0, b = 0.0;  // PowerLawRegime: beta = N^(b-2a)

    double beta(int n) const;
    double exponent() const;  // d log beta / d log N
    bool diverging_degree() const { return exponent() > -1.0; }         // N beta -> inf
    bool diverging_degree_sq() const { return exponent() > -0.5; }      // N beta^2 -> inf

    nlohmann::json to_json() const;
    static SparsitySchedule from_json(const nlohmann::json& j);
};

}  // namespace graphsim
