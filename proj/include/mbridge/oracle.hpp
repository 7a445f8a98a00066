#ifndef MBRIDGE_ORACLE_HPP
#define MBRIDGE_ORACLE_HPP

#include <cstdint>
#include <utility>

#include "mbridge/bridge.hpp"
#include "mbridge/measures.hpp"

namespace mbridge {

/// Dykstra-corrected cyclic KL projections onto (a) the column-marginal
/// set and (b) the per-row mass + barycenter sets, starting from
/// mu x nu. Works on the dense matrix directly and shares no kernel
/// evaluation code with the solver. Throws NonConvergence at max_iter.
Coupling dykstra_solve(const ProblemInstance& instance, double tol = 1e-10,
                       int max_iter = 50000);

/// Same iteration without the throw; exposes the final state for
/// diagnosing infeasible inputs.
struct DykstraRun {
    Coupling coupling;
    Residuals residuals;
    int cycles = 0;
    bool converged = false;
    /// H(iterate | mu x nu) after each full cycle.
    std::vector<double> kl_trace;
};
DykstraRun dykstra_run(const ProblemInstance& instance, double tol = 1e-10,
                       int max_iter = 50000);

/// The unique martingale coupling for nu = (delta_{-b} + delta_b)/2 and
/// centered mu supported in (-b, b): row kernels
/// ((b-x)/(2b), (b+x)/(2b)) and h(x) = log((b-x)/(b+x)) / (2b), g = 0,
/// f by exact row normalization. Potentials are returned in Canonical
/// gauge. Throws AtomOutOfRange.
std::pair<Coupling, Potentials> two_point_closed_form(const DiscreteMeasure& mu,
                                                      double b);

struct GeneratorSpec {
    std::uint64_t seed = 1;
    std::size_t n_mu = 5;
    std::size_t n_nu = 8;
    double spread = 1.0;
};

/// A seeded feasible instance together with the martingale coupling that
/// produced nu (mixture of per-row kernels on a common grid wider than
/// the mu hull). The instance passes all three feasibility flags by
/// construction.
struct GeneratedInstance {
    ProblemInstance instance;
    Coupling martingale_coupling;
};
GeneratedInstance generate_with_coupling(const GeneratorSpec& spec);

ProblemInstance generate_instance(const GeneratorSpec& spec);

}  // namespace mbridge

#endif  // MBRIDGE_ORACLE_HPP
