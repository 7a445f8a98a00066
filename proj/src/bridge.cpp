#include "mbridge/bridge.hpp"

#include <algorithm>
#include <cmath>

#include "mbridge/errors.hpp"
#include "mbridge/numerics.hpp"

namespace mbridge {

double Residuals::max() const {
    return std::max({marginal_mu, marginal_nu, martingale, mass});
}

double log_density(const Potentials& p, std::size_t i, std::size_t j,
                   std::span<const double> x, std::span<const double> y) {
    return p.f[i] + p.g[j] - p.h[i] * (y[j] - x[i]);
}

Coupling coupling_from_potentials(const Potentials& p, const DiscreteMeasure& mu,
                                  const DiscreteMeasure& nu) {
    const std::size_t n = mu.size(), m = nu.size();
    Coupling c{Matrix(n, m)};
    for (std::size_t i = 0; i < n; ++i) {
        const double base = std::log(mu.weight(i)) + p.f[i];
        for (std::size_t j = 0; j < m; ++j) {
            c.log_weights(i, j) = base + std::log(nu.weight(j)) + p.g[j] -
                                  p.h[i] * (nu.atom(j) - mu.atom(i));
        }
    }
    return c;
}

double rel_entropy(const Coupling& c, const DiscreteMeasure& mu,
                   const DiscreteMeasure& nu) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < c.log_weights.rows(); ++i) {
        const double log_mu = std::log(mu.weight(i));
        for (std::size_t j = 0; j < c.log_weights.cols(); ++j) {
            const double lw = c.log_weights(i, j);
            if (lw == kNegInf) continue;  // 0 log 0 = 0
            acc.add(std::exp(lw) * (lw - log_mu - std::log(nu.weight(j))));
        }
    }
    return acc.value();
}

double dual_objective(const Potentials& p, const DiscreteMeasure& mu,
                      const DiscreteMeasure& nu) {
    CompensatedSum linear;
    for (std::size_t i = 0; i < mu.size(); ++i) linear.add(mu.weight(i) * p.f[i]);
    for (std::size_t j = 0; j < nu.size(); ++j) linear.add(nu.weight(j) * p.g[j]);

    // Max-shifted logsumexp of log mu_i + log nu_j + log_density, row-major.
    double mx = kNegInf;
    const std::span<const double> x = mu.atoms(), y = nu.atoms();
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double base = std::log(mu.weight(i));
        for (std::size_t j = 0; j < nu.size(); ++j) {
            mx = std::max(mx, base + std::log(nu.weight(j)) + log_density(p, i, j, x, y));
        }
    }
    CompensatedSum sum;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double base = std::log(mu.weight(i));
        for (std::size_t j = 0; j < nu.size(); ++j) {
            sum.add(std::exp(base + std::log(nu.weight(j)) +
                             log_density(p, i, j, x, y) - mx));
        }
    }
    return linear.value() - (mx + std::log(sum.value()));
}

Potentials apply_gauge(const Potentials& p, const DiscreteMeasure& mu,
                       const DiscreteMeasure& nu, double alpha, double beta) {
    Potentials out = p;
    out.gauge = Gauge::Raw;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        out.f[i] = p.f[i] + alpha * mu.atom(i) + beta;
        out.h[i] = p.h[i] - alpha;
    }
    for (std::size_t j = 0; j < nu.size(); ++j)
        out.g[j] = p.g[j] - alpha * nu.atom(j) - beta;
    return out;
}

Potentials canonical_gauge(const Potentials& p, const DiscreteMeasure& mu,
                           const DiscreteMeasure& nu) {
    CompensatedSum mh;
    for (std::size_t i = 0; i < mu.size(); ++i) mh.add(mu.weight(i) * p.h[i]);
    const double alpha = mh.value();
    CompensatedSum ng;
    for (std::size_t j = 0; j < nu.size(); ++j)
        ng.add(nu.weight(j) * (p.g[j] - alpha * nu.atom(j)));
    const double beta = ng.value();
    Potentials out = apply_gauge(p, mu, nu, alpha, beta);
    out.gauge = Gauge::Canonical;
    return out;
}

Residuals residuals(const Coupling& c, const DiscreteMeasure& mu,
                    const DiscreteMeasure& nu) {
    const std::size_t n = c.log_weights.rows(), m = c.log_weights.cols();
    Residuals r;
    std::vector<double> col_sums(m, 0.0);
    CompensatedSum total, row_err, mart;
    for (std::size_t i = 0; i < n; ++i) {
        CompensatedSum row_sum, row_bary;
        for (std::size_t j = 0; j < m; ++j) {
            const double w = std::exp(c.log_weights(i, j));
            row_sum.add(w);
            row_bary.add(w * (nu.atom(j) - mu.atom(i)));
            col_sums[j] += w;
        }
        total.add(row_sum.value());
        row_err.add(std::abs(row_sum.value() - mu.weight(i)));
        mart.add(std::abs(row_bary.value()));
    }
    CompensatedSum col_err;
    for (std::size_t j = 0; j < m; ++j)
        col_err.add(std::abs(col_sums[j] - nu.weight(j)));
    r.marginal_mu = row_err.value();
    r.marginal_nu = col_err.value();
    r.martingale = mart.value();
    r.mass = std::abs(total.value() - 1.0);
    return r;
}

double coupling_distance(const Coupling& a, const Coupling& b) {
    if (a.log_weights.rows() != b.log_weights.rows() ||
        a.log_weights.cols() != b.log_weights.cols())
        throw ShapeMismatch("couplings have different shapes");
    CompensatedSum acc;
    const auto fa = a.log_weights.flat(), fb = b.log_weights.flat();
    for (std::size_t k = 0; k < fa.size(); ++k)
        acc.add(std::abs(std::exp(fa[k]) - std::exp(fb[k])));
    return 0.5 * acc.value();
}

}  // namespace mbridge
