#pragma once

#include <functional>
#include <vector>

#include "graphsim/common.hpp"

namespace graphsim::quad {

// Tensorized Gauss-Legendre quadrature over [0,1]^2 on a cell decomposition.
// Refinement doubles the uniform cells and deepens the dyadic ladder toward
// the axes; stops when two successive levels agree to rel_tol.
struct Options {
    double rel_tol = 1e-8;
    int max_level = 8;
    bool singular_origin = false;  // dyadic refinement toward x=0, y=0
    bool diagonal_kink = false;    // Duffy split of cells crossing x=y
    std::vector<double> breaks;    // mandatory axis breakpoints in (0,1)
    ExecPolicy policy = ExecPolicy::Serial;
};

double integrate_unit_square(const std::function<double(double, double)>& f, const Options& opt);

// Nodes/weights of the n-point rule mapped to [0,1]; cached per n.
void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace graphsim::quad
