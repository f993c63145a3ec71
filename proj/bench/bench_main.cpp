// Serial-vs-OpenMP comparison for the hot kernels: particle stepping, the
// Picard solve and W-random sampling.  The parallel path must reproduce the
// serial reference bit for bit; this also rechecks that.

#include <chrono>
#include <cstdio>
#include <string>

#include "graphsim/dynamics.hpp"
#include "graphsim/graphs.hpp"
#include "graphsim/limit_solver.hpp"

using namespace graphsim;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-24s serial %9.1f ms   parallel %9.1f ms   speedup %.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
    const TimeGrid grid{1.0, 100};
    CoefficientModel model(1, 1, DriftSpec{DriftSpec::Kind::LinearMean, -1.0, 1.0, 1.0, {}},
                           SigmaSpec{SigmaSpec::Kind::Constant, 0.4, {}});
    InitialSampler init;
    init.dim = 1;
    init.laws.push_back({InitialLaw::Kind::Gaussian, {0.0}, {1.0}});
    BrownianDriver driver(42, grid.dt());

    {
        const int n = 1500;
        InteractionGraph graph = deterministic_graph(
            discretize(Graphon::constant(1.0), GridSpec{n}), n, 1.0);
        auto t0 = std::chrono::steady_clock::now();
        PathEnsemble a = simulate_particle_system(graph, model, init, grid, driver, 7,
                                                  ExecPolicy::Serial);
        double ts = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        PathEnsemble b = simulate_particle_system(graph, model, init, grid, driver, 7,
                                                  ExecPolicy::Parallel);
        double tp = ms_since(t0);
        report("particle_system", ts, tp, a.data == b.data);
    }
    {
        StepGraphon g_k = discretize(Graphon::uniform_attachment(), GridSpec{64});
        auto t0 = std::chrono::steady_clock::now();
        LimitSolveResult a =
            solve_graphon_sde(g_k, model, init, grid, 512, 8, 1e-8, driver, 11, ExecPolicy::Serial);
        double ts = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        LimitSolveResult b = solve_graphon_sde(g_k, model, init, grid, 512, 8, 1e-8, driver, 11,
                                               ExecPolicy::Parallel);
        double tp = ms_since(t0);
        report("picard_solve", ts, tp, a.laws.data == b.laws.data);
    }
    {
        const int n = 3000;
        Graphon g = Graphon::uniform_attachment();
        auto t0 = std::chrono::steady_clock::now();
        InteractionGraph a = sample_w_random(g, n, 0.2, GraphMode::SymmetricSimple, 3,
                                             ExecPolicy::Serial);
        double ts = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        InteractionGraph b = sample_w_random(g, n, 0.2, GraphMode::SymmetricSimple, 3,
                                             ExecPolicy::Parallel);
        double tp = ms_since(t0);
        report("w_random_sampling", ts, tp, a.serialize() == b.serialize());
    }
    return 0;
}
