#include "mbridge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mbridge/errors.hpp"
#include "mbridge/numerics.hpp"
#include "mbridge/parallel.hpp"

namespace mbridge {

// The helpers below intentionally duplicate small pieces of numeric
// machinery instead of calling into the solver: the oracle must not share
// a kernel-evaluation path with the implementation it cross-checks.
namespace {

double local_lse(std::span<const double> a) {
    double mx = kNegInf;
    for (double v : a) mx = std::max(mx, v);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double v : a) s += std::exp(v - mx);
    return mx + std::log(s);
}

/// Tilt multiplier for a log-weighted row: finds lambda such that the
/// barycenter of weights exp(log_row_j - lambda d_j) equals zero (d_j are
/// the centered displacements y_j - x). Safeguarded Newton with geometric
/// bracket growth; |lambda| capped at 1e8.
double tilt_to_zero_barycenter(std::span<const double> log_row,
                               std::span<const double> d) {
    constexpr double cap = 1e8;
    constexpr double tol = 1e-13;
    const std::size_t m = d.size();

    auto moments = [&](double lam, double& mean, double& var) {
        double mx = kNegInf;
        for (std::size_t j = 0; j < m; ++j)
            mx = std::max(mx, log_row[j] - lam * d[j]);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double w = std::exp(log_row[j] - lam * d[j] - mx);
            s0 += w;
            s1 += w * d[j];
            s2 += w * d[j] * d[j];
        }
        mean = s1 / s0;
        var = std::max(0.0, s2 / s0 - mean * mean);
    };

    double lam = 0.0, lo = -cap, hi = cap;
    bool lo_ok = false, hi_ok = false;
    double mean, var;
    moments(lam, mean, var);
    for (int it = 0; it < 200; ++it) {
        if (std::abs(mean) <= tol) return lam;
        // mean is decreasing in lambda.
        if (mean > 0.0) {
            lo = lam;
            lo_ok = true;
        } else {
            hi = lam;
            hi_ok = true;
        }
        double next;
        if (lo_ok && hi_ok) {
            next = var > 0.0 ? lam + mean / var : 0.5 * (lo + hi);
            if (!(next > lo && next < hi) || next == lam) next = 0.5 * (lo + hi);
        } else {
            const double dir = mean > 0.0 ? 1.0 : -1.0;
            next = dir * std::max(1.0, 4.0 * std::max(0.0, dir * lam));
            if (var > 0.0) {
                const double newton = lam + mean / var;
                if (dir * newton > dir * next) next = newton;
            }
            if (dir * next >= cap) next = dir * cap;
        }
        if (next == lam) return lam;
        lam = next;
        moments(lam, mean, var);
        if (std::abs(lam) >= cap && ((lam > 0 && mean > 0) || (lam < 0 && mean < 0)))
            return lam;  // barycenter unreachable; give up at the cap
    }
    return lam;
}

double kl_to_reference(const Matrix& log_w, const DiscreteMeasure& mu,
                       const DiscreteMeasure& nu) {
    double acc = 0.0;
    for (std::size_t i = 0; i < log_w.rows(); ++i) {
        const double ref_i = std::log(mu.weight(i));
        for (std::size_t j = 0; j < log_w.cols(); ++j) {
            const double lw = log_w(i, j);
            if (lw == kNegInf) continue;
            acc += std::exp(lw) * (lw - ref_i - std::log(nu.weight(j)));
        }
    }
    return acc;
}

}  // namespace

DykstraRun dykstra_run(const ProblemInstance& instance, double tol, int max_iter) {
    const DiscreteMeasure& mu = instance.mu;
    const DiscreteMeasure& nu = instance.nu;
    const std::size_t n = mu.size(), m = nu.size();

    Matrix L(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            L(i, j) = std::log(mu.weight(i)) + std::log(nu.weight(j));
    Matrix corr_col(n, m, 0.0), corr_row(n, m, 0.0);

    DykstraRun run;
    std::vector<double> col_acc(m);
    for (int cycle = 1; cycle <= max_iter; ++cycle) {
        // KL projection onto {column sums = nu}, with Dykstra memory.
        for (std::size_t j = 0; j < m; ++j) col_acc[j] = kNegInf;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                L(i, j) += corr_col(i, j);
                col_acc[j] = std::max(col_acc[j], L(i, j));
            }
        std::vector<double> col_lse(m);
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += std::exp(L(i, j) - col_acc[j]);
            col_lse[j] = col_acc[j] + std::log(s);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const double scaled = L(i, j) + std::log(nu.weight(j)) - col_lse[j];
                corr_col(i, j) = L(i, j) - scaled;
                L(i, j) = scaled;
            }

        // KL projection of each row onto {mass = mu_i, barycenter = x_i}.
        parallel_for(n, [&](std::size_t i) {
            std::vector<double> d(m), tilted(m);
            for (std::size_t j = 0; j < m; ++j) {
                L(i, j) += corr_row(i, j);
                d[j] = nu.atom(j) - mu.atom(i);
            }
            const double lam = tilt_to_zero_barycenter(L.row(i), d);
            for (std::size_t j = 0; j < m; ++j) tilted[j] = L(i, j) - lam * d[j];
            const double z = local_lse(tilted);
            for (std::size_t j = 0; j < m; ++j) {
                const double scaled = tilted[j] - z + std::log(mu.weight(i));
                corr_row(i, j) = L(i, j) - scaled;
                L(i, j) = scaled;
            }
        });

        run.kl_trace.push_back(kl_to_reference(L, mu, nu));
        run.cycles = cycle;
        Coupling snapshot{L};
        run.residuals = residuals(snapshot, mu, nu);
        if (run.residuals.max() <= tol) {
            run.converged = true;
            run.coupling = std::move(snapshot);
            return run;
        }
        if (cycle == max_iter) run.coupling = std::move(snapshot);
    }
    run.converged = false;
    return run;
}

Coupling dykstra_solve(const ProblemInstance& instance, double tol, int max_iter) {
    DykstraRun run = dykstra_run(instance, tol, max_iter);
    if (!run.converged)
        throw NonConvergence("Dykstra projections did not reach tol after " +
                             std::to_string(run.cycles) + " cycles");
    return std::move(run.coupling);
}

std::pair<Coupling, Potentials> two_point_closed_form(const DiscreteMeasure& mu,
                                                      double b) {
    if (!(b > 0.0)) throw AtomOutOfRange("b must be positive");
    for (double x : mu.atoms())
        if (!(x > -b && x < b))
            throw AtomOutOfRange("mu atom " + std::to_string(x) +
                                 " outside (-b, b)");

    const DiscreteMeasure nu =
        validate_measure({-b, b}, {0.5, 0.5});
    const std::size_t n = mu.size();

    Coupling c{Matrix(n, 2)};
    Potentials p;
    p.f.resize(n);
    p.h.resize(n);
    p.g = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = mu.atom(i);
        c.log_weights(i, 0) = std::log(mu.weight(i)) + std::log((b - x) / (2 * b));
        c.log_weights(i, 1) = std::log(mu.weight(i)) + std::log((b + x) / (2 * b));
        p.h[i] = std::log((b - x) / (b + x)) / (2 * b);
        // Exact row normalization: f = -log sum_j nu_j e^{g_j - h (y_j - x)}.
        const double a0 = std::log(0.5) - p.h[i] * (-b - x);
        const double a1 = std::log(0.5) - p.h[i] * (b - x);
        const double mx = std::max(a0, a1);
        p.f[i] = -(mx + std::log(std::exp(a0 - mx) + std::exp(a1 - mx)));
    }
    Potentials canonical = canonical_gauge(p, mu, nu);
    return {std::move(c), std::move(canonical)};
}

namespace {

/// mt19937_64-backed uniforms with a fixed bit-to-double mapping, so the
/// same seed gives the same instance on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  private:
    std::mt19937_64 eng_;
};

std::vector<double> draw_distinct_sorted(Rng& rng, std::size_t k, double lo,
                                         double hi) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<double> v(k);
        for (double& x : v) x = rng.uniform(lo, hi);
        std::sort(v.begin(), v.end());
        if (std::adjacent_find(v.begin(), v.end()) == v.end()) return v;
    }
    throw Error("generator failed to draw distinct atoms");
}

}  // namespace

GeneratedInstance generate_with_coupling(const GeneratorSpec& spec) {
    if (spec.n_mu < 1 || spec.n_nu < 2 || !(spec.spread > 0.0))
        throw Error("invalid generator spec");
    Rng rng(spec.seed);
    const double s = spec.spread;

    // mu: atoms in the middle of the band, weights bounded away from 0.
    std::vector<double> x = draw_distinct_sorted(rng, spec.n_mu, -0.5 * s, 0.5 * s);
    std::vector<double> w(spec.n_mu);
    double wsum = 0.0;
    for (double& wi : w) {
        wi = rng.uniform(0.2, 1.0);
        wsum += wi;
    }
    for (double& wi : w) wi /= wsum;
    {
        CompensatedSum mean;
        for (std::size_t i = 0; i < x.size(); ++i) mean.add(w[i] * x[i]);
        for (double& xi : x) xi -= mean.value();
    }

    // nu grid strictly wider than the mu hull; the endpoints carry kernel
    // mass from every row, which secures the endpoint condition.
    const double margin_lo = s * rng.uniform(0.15, 0.35);
    const double margin_hi = s * rng.uniform(0.15, 0.35);
    const double y_lo = x.front() - margin_lo;
    const double y_hi = x.back() + margin_hi;
    std::vector<double> y(spec.n_nu);
    if (spec.n_nu == 2) {
        y = {y_lo, y_hi};
    } else {
        std::vector<double> interior =
            draw_distinct_sorted(rng, spec.n_nu - 2, y_lo + 0.05 * s, y_hi - 0.05 * s);
        y.clear();
        y.push_back(y_lo);
        y.insert(y.end(), interior.begin(), interior.end());
        y.push_back(y_hi);
    }

    // Per-row kernels on the common grid, tilted to barycenter x_i and
    // patched exactly through the extreme grid points.
    Matrix kernels(spec.n_mu, spec.n_nu);
    std::vector<double> nu_w(spec.n_nu, 0.0);
    for (std::size_t i = 0; i < spec.n_mu; ++i) {
        std::vector<double> log_raw(spec.n_nu), d(spec.n_nu);
        for (std::size_t j = 0; j < spec.n_nu; ++j) {
            log_raw[j] = std::log(rng.uniform(0.2, 1.0));
            d[j] = y[j] - x[i];
        }
        const double lam = tilt_to_zero_barycenter(log_raw, d);
        std::vector<double> tilted(spec.n_nu);
        for (std::size_t j = 0; j < spec.n_nu; ++j)
            tilted[j] = log_raw[j] - lam * d[j];
        const double z = local_lse(tilted);
        CompensatedSum bary;
        for (std::size_t j = 0; j < spec.n_nu; ++j) {
            kernels(i, j) = std::exp(tilted[j] - z);
            bary.add(kernels(i, j) * d[j]);
        }
        const double patch = bary.value() / (y.back() - y.front());
        kernels(i, 0) += patch;
        kernels(i, spec.n_nu - 1) -= patch;
        for (std::size_t j = 0; j < spec.n_nu; ++j)
            nu_w[j] += w[i] * kernels(i, j);
    }

    DiscreteMeasure mu = validate_measure(x, w);
    DiscreteMeasure nu = validate_measure(y, nu_w);
    ProblemInstance instance = make_instance(mu, nu);

    Coupling coupling{Matrix(spec.n_mu, spec.n_nu)};
    for (std::size_t i = 0; i < spec.n_mu; ++i)
        for (std::size_t j = 0; j < spec.n_nu; ++j)
            coupling.log_weights(i, j) = std::log(w[i] * kernels(i, j));

    return GeneratedInstance{std::move(instance), std::move(coupling)};
}

ProblemInstance generate_instance(const GeneratorSpec& spec) {
    return generate_with_coupling(spec).instance;
}

}  // namespace mbridge
