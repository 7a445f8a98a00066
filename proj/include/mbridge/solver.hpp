#ifndef MBRIDGE_SOLVER_HPP
#define MBRIDGE_SOLVER_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mbridge/bridge.hpp"
#include "mbridge/measures.hpp"

namespace mbridge {

enum class SolveMode { Martingale, Relaxed };

struct SolverConfig {
    double tol = 1e-9;          // stopping threshold on the max residual
    int max_iter = 10000;       // full sweeps
    double h_max = 1e3;         // multiplier cap; rows at the hull boundary hit it
    SolveMode mode = SolveMode::Martingale;
    double newton_tol = 1e-12;  // |dLambda/dh| target in the row solve
    int newton_max_iter = 60;
};

/// One dual sweep snapshot. one_sided and comp_slack are the relaxed-mode
/// stopping quantities and stay unset in Martingale mode.
struct TracePoint {
    Residuals residuals;
    double dual = 0.0;
    std::optional<double> one_sided;
    std::optional<double> comp_slack;
};

struct RowSolution {
    double f = 0.0;
    double h = 0.0;
    bool clipped = false;
};

/// g_j = -logsumexp_i [log mu_i + f_i - h_i (y_j - x_i)]. Afterwards the
/// first Schroedinger equation holds at every nu atom.
std::vector<double> update_g(std::span<const double> f, std::span<const double> h,
                             const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Per-row dual block: minimizes the convex log-partition
/// Lambda_x(h) = logsumexp_j [log nu_j + g_j - h (y_j - x)] over h
/// (safeguarded Newton, bisection fallback, geometric bracket growth,
/// |h| capped at h_max with clipped=true). Relaxed mode projects the
/// minimizer onto the sign constraint x h <= 0. Either way
/// f = -Lambda_x(h), which normalizes the row exactly.
/// Throws InfeasibleRow (Martingale mode, x outside the closed nu hull)
/// and NonConvergence.
RowSolution solve_row(double x, std::span<const double> g,
                      const DiscreteMeasure& nu, SolveMode mode,
                      const SolverConfig& config, double h_init = 0.0);

struct SolveReport {
    Potentials potentials;      // Canonical gauge
    Potentials raw_potentials;  // as converged; relaxed mode keeps x h <= 0 here
    Coupling coupling;
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
    Residuals residuals;
    int iterations = 0;
    bool converged = false;
    SolveMode mode = SolveMode::Martingale;
    double one_sided = 0.0;   // relaxed stopping residual (0 in Martingale mode)
    double comp_slack = 0.0;  // sum_i mu_i |h_i b_i| (relaxed mode)
    std::optional<double> tv_to_martingale;  // relaxed mode only
    std::vector<std::string> warnings;
    std::vector<TracePoint> trace;
};

/// Alternating dual ascent: update_g, then an exact per-row (f, h) solve,
/// until the coupling residuals drop below tol. Throws Infeasible when
/// the instance is not in convex order; non-convergence is reported, not
/// thrown.
SolveReport solve(const ProblemInstance& instance, const SolverConfig& config = {});

/// solve() with mode = Relaxed plus the distance of the relaxed coupling
/// to the Martingale-mode coupling.
SolveReport solve_relaxed(const ProblemInstance& instance, SolverConfig config = {});

}  // namespace mbridge

#endif  // MBRIDGE_SOLVER_HPP
