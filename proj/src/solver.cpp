#include "mbridge/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mbridge/errors.hpp"
#include "mbridge/numerics.hpp"
#include "mbridge/parallel.hpp"

namespace mbridge {

std::vector<double> update_g(std::span<const double> f, std::span<const double> h,
                             const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const std::size_t n = mu.size(), m = nu.size();
    std::vector<double> log_mu(n);
    for (std::size_t i = 0; i < n; ++i) log_mu[i] = std::log(mu.weight(i));

    std::vector<double> g(m);
    parallel_for(m, [&](std::size_t j) {
        const double yj = nu.atom(j);
        double mx = kNegInf;
        for (std::size_t i = 0; i < n; ++i)
            mx = std::max(mx, log_mu[i] + f[i] - h[i] * (yj - mu.atom(i)));
        CompensatedSum sum;
        for (std::size_t i = 0; i < n; ++i)
            sum.add(std::exp(log_mu[i] + f[i] - h[i] * (yj - mu.atom(i)) - mx));
        g[j] = -(mx + std::log(sum.value()));
    });
    return g;
}

namespace {

/// Log-partition of the h-tilted row:
/// Lambda(h) = logsumexp_j [log nu_j + g_j - h (y_j - x)].
/// deriv = x - tilted barycenter (nondecreasing in h), curv = tilted
/// variance >= 0.
struct LogPartition {
    double value;
    double deriv;
    double curv;
};

LogPartition eval_log_partition(double x, double h, std::span<const double> g,
                                const DiscreteMeasure& nu) {
    const std::size_t m = nu.size();
    double mx = kNegInf;
    for (std::size_t j = 0; j < m; ++j) {
        const double a = std::log(nu.weight(j)) + g[j] - h * (nu.atom(j) - x);
        mx = std::max(mx, a);
    }
    CompensatedSum s0, s1, s2;
    for (std::size_t j = 0; j < m; ++j) {
        const double d = nu.atom(j) - x;
        const double w = std::exp(std::log(nu.weight(j)) + g[j] - h * d - mx);
        s0.add(w);
        s1.add(w * d);
        s2.add(w * d * d);
    }
    const double z = s0.value();
    const double mean = s1.value() / z;
    const double var = std::max(0.0, s2.value() / z - mean * mean);
    return LogPartition{mx + std::log(z), -mean, var};
}

}  // namespace

RowSolution solve_row(double x, std::span<const double> g,
                      const DiscreteMeasure& nu, SolveMode mode,
                      const SolverConfig& config, double h_init) {
    if (mode == SolveMode::Martingale &&
        (x < nu.min_atom() || x > nu.max_atom())) {
        std::ostringstream os;
        os.precision(17);
        os << "row barycenter " << x << " outside nu hull [" << nu.min_atom()
           << ", " << nu.max_atom() << "]";
        throw InfeasibleRow(os.str());
    }

    const double cap = config.h_max;
    double h = std::clamp(h_init, -cap, cap);
    double lo = -cap, hi = cap;          // bracket on the sign of deriv
    bool lo_signed = false, hi_signed = false;
    bool clipped = false;
    bool converged = false;

    LogPartition lp = eval_log_partition(x, h, g, nu);
    for (int it = 0; it < config.newton_max_iter; ++it) {
        if (std::abs(lp.deriv) <= config.newton_tol) {
            converged = true;
            break;
        }
        if (lp.deriv < 0.0) {
            lo = h;
            lo_signed = true;
        } else {
            hi = h;
            hi_signed = true;
        }

        double next;
        if (lo_signed && hi_signed) {
            // Bracketed: Newton, bisection when the step leaves the bracket.
            next = lp.curv > 0.0 ? h - lp.deriv / lp.curv : 0.5 * (lo + hi);
            if (!(next > lo && next < hi) || next == h) next = 0.5 * (lo + hi);
        } else {
            // Root not bracketed yet: move toward it at least geometrically
            // (probes 1, 4, 16, ... from the origin), letting a Newton step
            // jump further when it wants to.
            const double dir = lp.deriv < 0.0 ? 1.0 : -1.0;
            const double geometric = std::max(1.0, 4.0 * std::max(0.0, dir * h));
            double step_to = dir * geometric;
            if (lp.curv > 0.0) {
                const double newton = h - lp.deriv / lp.curv;
                if (dir * newton > dir * step_to) step_to = newton;
            }
            next = step_to;
            if (dir * next >= cap) {
                next = dir * cap;
                const LogPartition at_cap = eval_log_partition(x, next, g, nu);
                const bool beyond = dir > 0 ? at_cap.deriv < 0.0 : at_cap.deriv > 0.0;
                if (beyond || std::abs(at_cap.deriv) <= config.newton_tol) {
                    h = next;
                    lp = at_cap;
                    clipped = std::abs(at_cap.deriv) > config.newton_tol;
                    converged = true;
                    break;
                }
                h = next;
                lp = at_cap;
                continue;
            }
        }
        h = next;
        lp = eval_log_partition(x, h, g, nu);
    }
    if (!converged && std::abs(lp.deriv) > config.newton_tol)
        throw NonConvergence("row solve at x=" + std::to_string(x) +
                             " did not reach the Newton tolerance");

    if (mode == SolveMode::Relaxed) {
        // Project the minimizer onto x h <= 0; for scalar convex Lambda this
        // is the constrained minimizer.
        double projected = h;
        if (x > 0.0) projected = std::min(h, 0.0);
        if (x < 0.0) projected = std::max(h, 0.0);
        if (projected != h) {
            h = projected;
            lp = eval_log_partition(x, h, g, nu);
            clipped = false;
        }
    }

    return RowSolution{-lp.value, h, clipped};
}

namespace {

struct SweepState {
    std::vector<double> f, g, h;
    std::vector<char> clipped;
};

/// Conditional row barycenter errors b_i of the implied coupling (rows
/// are exactly normalized, so this is the tilted mean minus x).
std::vector<double> row_barycenter_errors(const SweepState& s,
                                          const DiscreteMeasure& mu,
                                          const DiscreteMeasure& nu) {
    std::vector<double> b(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        LogPartition lp = eval_log_partition(mu.atom(i), s.h[i], s.g, nu);
        b[i] = -lp.deriv;
    }
    return b;
}

}  // namespace

SolveReport solve(const ProblemInstance& instance, const SolverConfig& config) {
    if (config.tol <= 0 || config.h_max <= 0 || config.max_iter < 1)
        throw Error("invalid solver configuration");
    if (!instance.feasibility.convex_order)
        throw Infeasible("instance is not in convex order");

    const DiscreteMeasure& mu = instance.mu;
    const DiscreteMeasure& nu = instance.nu;
    const std::size_t n = mu.size();
    const bool relaxed = config.mode == SolveMode::Relaxed;

    SolveReport report;
    report.mode = config.mode;
    if (!instance.feasibility.irreducible)
        report.warnings.push_back("pair is not irreducible");
    if (!instance.feasibility.endpoint_assumption)
        report.warnings.push_back(
            "nu carries no mass at or beyond an endpoint of supp(mu)");

    SweepState state;
    state.f.assign(n, 0.0);
    state.h.assign(n, 0.0);
    state.g.assign(nu.size(), 0.0);
    state.clipped.assign(n, 0);
    std::vector<std::string> row_failures(n);

    Coupling coupling;
    Residuals res;
    double one_sided = 0.0, comp_slack = 0.0;
    int iter = 0;
    bool converged = false;
    bool rows_failed = false;

    while (iter < config.max_iter) {
        ++iter;
        state.g = update_g(state.f, state.h, mu, nu);

        parallel_for(n, [&](std::size_t i) {
            try {
                RowSolution rs = solve_row(mu.atom(i), state.g, nu, config.mode,
                                           config, state.h[i]);
                state.f[i] = rs.f;
                state.h[i] = rs.h;
                state.clipped[i] = rs.clipped ? 1 : 0;
            } catch (const Error& e) {
                row_failures[i] = e.what();
            }
        });
        for (const std::string& msg : row_failures) {
            if (!msg.empty()) {
                rows_failed = true;
                report.warnings.push_back("row solve failed: " + msg);
            }
        }

        Potentials p{state.f, state.g, state.h, Gauge::Raw};
        coupling = coupling_from_potentials(p, mu, nu);
        res = residuals(coupling, mu, nu);

        double stop_residual;
        if (relaxed) {
            const std::vector<double> b = row_barycenter_errors(state, mu, nu);
            CompensatedSum os_acc, cs_acc;
            for (std::size_t i = 0; i < n; ++i) {
                const double x = mu.atom(i);
                os_acc.add(mu.weight(i) * std::max(0.0, -x * b[i]) /
                           (std::abs(x) + 1.0));
                cs_acc.add(mu.weight(i) * std::abs(state.h[i] * b[i]));
            }
            one_sided = os_acc.value();
            comp_slack = cs_acc.value();
            stop_residual =
                std::max({res.marginal_nu, res.mass, one_sided, comp_slack});
        } else {
            stop_residual = std::max({res.marginal_nu, res.martingale, res.mass});
        }

        TracePoint tp;
        tp.residuals = res;
        tp.dual = dual_objective(p, mu, nu);
        if (relaxed) {
            tp.one_sided = one_sided;
            tp.comp_slack = comp_slack;
        }
        report.trace.push_back(tp);

        if (rows_failed) break;
        if (stop_residual <= config.tol) {
            converged = true;
            break;
        }
    }

    report.raw_potentials = Potentials{state.f, state.g, state.h, Gauge::Raw};
    report.potentials = canonical_gauge(report.raw_potentials, mu, nu);
    report.coupling = std::move(coupling);
    report.residuals = res;
    report.iterations = iter;
    report.converged = converged;
    report.one_sided = one_sided;
    report.comp_slack = comp_slack;
    report.primal = rel_entropy(report.coupling, mu, nu);
    report.dual = dual_objective(report.potentials, mu, nu);
    report.gap = report.primal - report.dual;

    if (std::any_of(state.clipped.begin(), state.clipped.end(),
                    [](char c) { return c != 0; })) {
        const auto count =
            std::count(state.clipped.begin(), state.clipped.end(), 1);
        std::ostringstream os;
        os << count << " row multiplier(s) clipped at h_max=" << config.h_max;
        report.warnings.push_back(os.str());
    }
    if (!converged)
        report.warnings.push_back(
            "stopped before reaching tol; the primal-dual gap certifies "
            "optimality only at convergence");
    return report;
}

SolveReport solve_relaxed(const ProblemInstance& instance, SolverConfig config) {
    config.mode = SolveMode::Relaxed;
    SolveReport report = solve(instance, config);

    SolverConfig mart_config = config;
    mart_config.mode = SolveMode::Martingale;
    SolveReport mart = solve(instance, mart_config);
    report.tv_to_martingale = coupling_distance(report.coupling, mart.coupling);
    if (!mart.converged)
        report.warnings.push_back(
            "martingale-mode reference solve did not converge; "
            "tv_to_martingale is indicative only");
    return report;
}

}  // namespace mbridge
