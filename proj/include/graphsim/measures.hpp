#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphsim/common.hpp"
#include "graphsim/graphon.hpp"
#include "graphsim/graphs.hpp"

namespace graphsim {

// Finite positive measure on R^n as atoms + weights; mass need not be 1.
struct DiscreteMeasure {
    int dim = 1;
    std::vector<double> pts;  // atoms * dim, row-major
    std::vector<double> w;    // nonnegative

    int atoms() const { return static_cast<int>(w.size()); }
    const double* atom(int k) const { return pts.data() + static_cast<std::size_t>(k) * dim; }
    void push(const double* x, double weight);
    double total_mass() const;
    std::vector<double> first_moment() const;  // integral of x, not normalized
};

// Capability view used by coefficient models: only the functionals they need,
// evaluated without materializing atom lists.
class MeasureView {
  public:
    virtual ~MeasureView() = default;
    virtual int dim() const = 0;
    virtual double total_mass() const = 0;
    virtual double first_moment(int component) const = 0;
    // 1-d trig moments for the oscillator drift
    virtual double sin_moment() const = 0;
    virtual double cos_moment() const = 0;
    // bounded Lipschitz norm; f == 1 attains the sup for positive measures
    double bl_norm() const { return total_mass(); }
};

class DiscreteMeasureView final : public MeasureView {
  public:
    explicit DiscreteMeasureView(const DiscreteMeasure& m) : m_(m) {}
    int dim() const override { return m_.dim; }
    double total_mass() const override;
    double first_moment(int component) const override;
    double sin_moment() const override;
    double cos_moment() const override;

  private:
    const DiscreteMeasure& m_;
};

// m^{i,N} = (1/(N beta)) sum_j zeta_ij delta_{states[j]}; zero weights dropped.
DiscreteMeasure weighted_empirical(const InteractionGraph& graph, int i,
                                   const std::vector<double>& states, int dim);

// Discretized graphon integral: sum_j |block_j| g_N(x, x_j) * block_laws[j].
DiscreteMeasure graphon_integral_measure(const StepGraphon& g_n, double x,
                                         const std::vector<DiscreteMeasure>& block_laws);

struct DblOptions {
    int max_support = 512;  // combined atom cap for the exact LP
};

// Exact d_BL between finite positive measures: sup over |f|<=1, Lip(f)<=1 of
// int f d(mu-nu).  Solved exactly through the LP's min-cost-flow dual.
double dbl_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DblOptions& opt = {});

struct DictionaryOptions {
    int directions = 16;
    int anchors = 32;
    uint64_t seed = 0;
};

// Lower bound on d_BL from a fixed family of feasible test functions.
double dbl_estimate(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                    const DictionaryOptions& opt = {});

// 1-d Wasserstein-1 by quantile coupling; requires equal masses.  Upper
// bound oracle for d_BL.
double w1_sorted(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Deterministic mass-preserving reduction to at most `cap` atoms.
DiscreteMeasure subsample_measure(const DiscreteMeasure& m, int cap, uint64_t seed, uint64_t key);

std::string measure_to_text(const DiscreteMeasure& m);
DiscreteMeasure measure_from_text(const std::string& text);

}  // namespace graphsim
