#include "mbridge/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mbridge/errors.hpp"
#include "mbridge/numerics.hpp"

namespace mbridge {

namespace {

std::string describe(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

double DiscreteMeasure::mean() const {
    CompensatedSum acc;
    for (std::size_t i = 0; i < atoms_.size(); ++i) acc.add(weights_[i] * atoms_[i]);
    return acc.value();
}

DiscreteMeasure DiscreteMeasure::shifted(double s) const {
    DiscreteMeasure out = *this;
    for (double& a : out.atoms_) a -= s;
    return out;
}

DiscreteMeasure validate_measure(std::vector<double> atoms,
                                 std::vector<double> weights) {
    if (atoms.size() != weights.size())
        throw ShapeMismatch("atoms and weights have different lengths");
    if (atoms.empty()) throw EmptySupport("measure has no atoms");
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0))
            throw NonPositiveWeight("weight " + describe(weights[i]) +
                                    " at atom " + describe(atoms[i]));
        if (!std::isfinite(atoms[i]))
            throw Error("non-finite atom " + describe(atoms[i]));
    }

    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

    std::vector<double> sorted_atoms, sorted_weights;
    sorted_atoms.reserve(atoms.size());
    sorted_weights.reserve(atoms.size());
    for (std::size_t k : order) {
        if (!sorted_atoms.empty() && atoms[k] == sorted_atoms.back()) {
            sorted_weights.back() += weights[k];  // merge duplicate atoms
        } else {
            sorted_atoms.push_back(atoms[k]);
            sorted_weights.push_back(weights[k]);
        }
    }

    const double total = compensated_sum(sorted_weights);
    if (std::abs(total - 1.0) > 1e-9)
        throw NotNormalized("weights sum to " + describe(total));
    if (total != 1.0) {
        for (double& w : sorted_weights) w /= total;
        // Pin the compensated total to exactly 1 so that re-validating a
        // serialized measure is a bitwise no-op.
        for (int pass = 0; pass < 4; ++pass) {
            const double defect = compensated_sum(sorted_weights) - 1.0;
            if (defect == 0.0) break;
            auto mx = std::max_element(sorted_weights.begin(), sorted_weights.end());
            *mx -= defect;
        }
    }

    return DiscreteMeasure(std::move(sorted_atoms), std::move(sorted_weights));
}

double potential_fn(const DiscreteMeasure& rho, double x) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < rho.size(); ++i)
        acc.add(rho.weight(i) * std::abs(x - rho.atom(i)));
    return acc.value();
}

namespace {

/// Center to mean zero; a second pass removes the rounding left by the
/// first so the 1e-12 postcondition holds regardless of atom scale.
DiscreteMeasure center(const DiscreteMeasure& m, double& applied) {
    DiscreteMeasure out = m.shifted(m.mean());
    applied = m.mean();
    const double rest = out.mean();
    if (rest != 0.0) {
        out = out.shifted(rest);
        applied += rest;
    }
    return out;
}

}  // namespace

CenteredPair center_pair(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const double mm = mu.mean();
    const double mn = nu.mean();
    if (std::abs(mm - mn) > 1e-9)
        throw MeanMismatch("means differ: mu " + describe(mm) + ", nu " +
                           describe(mn));
    double shift_mu = 0.0, shift_nu = 0.0;
    DiscreteMeasure cmu = center(mu, shift_mu);
    DiscreteMeasure cnu = center(nu, shift_nu);
    return CenteredPair{std::move(cmu), std::move(cnu), shift_mu};
}

namespace {

constexpr double kStrictEps = 1e-12;  // strict-inequality margin for phi_mu < phi_nu

/// Linear interpolation of the crossing d(t) = eps between two kinks.
double crossing(double t0, double d0, double t1, double d1) {
    return t0 + (t1 - t0) * (d0 - kStrictEps) / (d0 - d1);
}

}  // namespace

FeasibilityReport check_feasibility(const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu) {
    FeasibilityReport rep;

    const double mean_mu = mu.mean();
    const double mean_nu = nu.mean();
    rep.means_equal = std::abs(mean_mu - mean_nu) <= 1e-9;
    if (!rep.means_equal)
        rep.detail.push_back("means differ: mu " + describe(mean_mu) + ", nu " +
                             describe(mean_nu));

    // Kink points of both potential functions; piecewise linearity makes
    // comparison at these points exact.
    std::vector<double> kinks;
    kinks.reserve(mu.size() + nu.size());
    kinks.insert(kinks.end(), mu.atoms().begin(), mu.atoms().end());
    kinks.insert(kinks.end(), nu.atoms().begin(), nu.atoms().end());
    std::sort(kinks.begin(), kinks.end());
    kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());

    bool order_ok = rep.means_equal;
    for (double t : kinks) {
        const double pm = potential_fn(mu, t);
        const double pn = potential_fn(nu, t);
        if (pm > pn + kStrictEps) {
            order_ok = false;
            rep.detail.push_back("convex order violated at t=" + describe(t) +
                                 ": phi_mu=" + describe(pm) +
                                 " > phi_nu=" + describe(pn));
        }
    }
    rep.convex_order = order_ok;

    if (rep.convex_order) {
        // d(t) = phi_nu - phi_mu, piecewise linear between kinks, constant
        // (and ~0 for centered equal-mean pairs) outside the union hull.
        auto d = [&](double t) { return potential_fn(nu, t) - potential_fn(mu, t); };
        const double anchor = mean_mu;

        Interval I{anchor, anchor};
        if (d(anchor) > kStrictEps) {
            // Walk right from the anchor.
            double prev_t = anchor, prev_d = d(anchor);
            I.hi = std::numeric_limits<double>::infinity();
            for (double t : kinks) {
                if (t <= anchor) continue;
                const double dt = d(t);
                if (dt <= kStrictEps) {
                    I.hi = crossing(prev_t, prev_d, t, dt);
                    break;
                }
                prev_t = t;
                prev_d = dt;
            }
            // Walk left.
            prev_t = anchor;
            prev_d = d(anchor);
            I.lo = -std::numeric_limits<double>::infinity();
            for (auto it = kinks.rbegin(); it != kinks.rend(); ++it) {
                const double t = *it;
                if (t >= anchor) continue;
                const double dt = d(t);
                if (dt <= kStrictEps) {
                    I.lo = crossing(prev_t, prev_d, t, dt);
                    break;
                }
                prev_t = t;
                prev_d = dt;
            }
        }
        rep.interval_I = I;

        bool all_inside = I.lo < I.hi;
        for (double x : mu.atoms()) {
            if (!(x > I.lo && x < I.hi)) {
                all_inside = false;
                if (I.lo < I.hi)
                    rep.detail.push_back("mu atom " + describe(x) +
                                         " outside I=(" + describe(I.lo) + ", " +
                                         describe(I.hi) + ")");
            }
        }
        if (!(I.lo < I.hi))
            rep.detail.push_back("potential functions never strictly separated");
        rep.irreducible = all_inside;
    }

    // nu mass at or beyond the endpoints of supp(mu).
    const double s_minus = mu.min_atom();
    const double s_plus = mu.max_atom();
    double left_mass = 0.0, right_mass = 0.0;
    for (std::size_t j = 0; j < nu.size(); ++j) {
        if (nu.atom(j) <= s_minus) left_mass += nu.weight(j);
        if (nu.atom(j) >= s_plus) right_mass += nu.weight(j);
    }
    rep.endpoint_assumption = left_mass > 0.0 && right_mass > 0.0;
    if (left_mass <= 0.0)
        rep.detail.push_back("nu has no mass at or left of s-=" + describe(s_minus));
    if (right_mass <= 0.0)
        rep.detail.push_back("nu has no mass at or right of s+=" + describe(s_plus));

    return rep;
}

ProblemInstance make_instance(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu) {
    if (std::abs(mu.mean() - nu.mean()) <= 1e-9) {
        CenteredPair c = center_pair(mu, nu);
        FeasibilityReport rep = check_feasibility(c.mu, c.nu);
        return ProblemInstance{std::move(c.mu), std::move(c.nu), std::move(rep),
                               c.shift};
    }
    // Mean mismatch: leave uncentered, the report carries the verdict.
    FeasibilityReport rep = check_feasibility(mu, nu);
    return ProblemInstance{mu, nu, std::move(rep), 0.0};
}

}  // namespace mbridge
