#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mbridge/bridge.hpp"
#include "mbridge/errors.hpp"
#include "mbridge/measures.hpp"
#include "mbridge/numerics.hpp"
#include "mbridge/oracle.hpp"
#include "mbridge/solver.hpp"

using namespace mbridge;

namespace {

DiscreteMeasure golden_mu() { return validate_measure({-0.25, 0.25}, {0.5, 0.5}); }
DiscreteMeasure golden_nu() { return validate_measure({-0.5, 0.5}, {0.5, 0.5}); }

/// The unique martingale coupling of the golden pair: conditional rows
/// [3/4, 1/4] and [1/4, 3/4], each carrying mass 1/2.
Coupling golden_coupling() {
    Coupling c{Matrix(2, 2)};
    c.log_weights(0, 0) = std::log(3.0 / 8.0);
    c.log_weights(0, 1) = std::log(1.0 / 8.0);
    c.log_weights(1, 0) = std::log(1.0 / 8.0);
    c.log_weights(1, 1) = std::log(3.0 / 8.0);
    return c;
}

double uniform(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace

TEST_CASE("log_density of zero potentials is zero") {
    DiscreteMeasure mu = golden_mu(), nu = golden_nu();
    Potentials p = Potentials::zeros(mu.size(), nu.size());
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(log_density(p, i, j, mu.atoms(), nu.atoms()) == 0.0);
}

TEST_CASE("log_density arithmetic identity") {
    std::vector<double> x = {0.0}, y = {1.0};
    Potentials p{{1.0}, {2.0}, {3.0}, Gauge::Raw};
    CHECK(log_density(p, 0, 0, x, y) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("log_density matches the two-point closed form density ratio") {
    // x = 0.25, y = b = 0.5: the unique coupling gives the conditional
    // weight (b+x)/(2b) on y = b against the nu weight 1/2, so the density
    // is (b+x)/b = 1.5.
    const double b = 0.5, x = 0.25;
    const double h = std::log((b - x) / (b + x)) / (2 * b);  // log(1/3)
    const double a0 = std::log(0.5) - h * (-b - x);
    const double a1 = std::log(0.5) - h * (b - x);
    const double mx = std::max(a0, a1);
    const double f = -(mx + std::log(std::exp(a0 - mx) + std::exp(a1 - mx)));

    std::vector<double> xs = {x}, ys = {-b, b};
    Potentials p{{f}, {0.0, 0.0}, {h}, Gauge::Raw};
    CHECK(log_density(p, 0, 1, xs, ys) ==
          doctest::Approx(std::log(1.5)).epsilon(1e-14));
}

TEST_CASE("coupling_from_potentials at zero potentials is the product") {
    DiscreteMeasure mu = golden_mu(), nu = golden_nu();
    Coupling c = coupling_from_potentials(Potentials::zeros(2, 2), mu, nu);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::exp(c.log_weights(i, j)) ==
                  doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("converged potentials reproduce row barycenters") {
    ProblemInstance inst = make_instance(golden_mu(), golden_nu());
    SolveReport rep = solve(inst);
    Coupling c = coupling_from_potentials(rep.potentials, inst.mu, inst.nu);
    for (std::size_t i = 0; i < inst.mu.size(); ++i) {
        double mass = 0.0, bary = 0.0;
        for (std::size_t j = 0; j < inst.nu.size(); ++j) {
            const double w = std::exp(c.log_weights(i, j));
            mass += w;
            bary += w * inst.nu.atom(j);
        }
        CHECK(bary / mass == doctest::Approx(inst.mu.atom(i)).epsilon(1e-8));
    }
}

TEST_CASE("coupling mass is definitional, no silent normalization") {
    DiscreteMeasure mu = golden_mu(), nu = golden_nu();
    Potentials p{{0.3, -0.2}, {0.1, 0.4}, {-1.0, 2.0}, Gauge::Raw};
    Coupling c = coupling_from_potentials(p, mu, nu);
    double direct = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            direct += mu.weight(i) * nu.weight(j) *
                      std::exp(log_density(p, i, j, mu.atoms(), nu.atoms()));
    double mass = 0.0;
    for (double lw : c.log_weights.flat()) mass += std::exp(lw);
    CHECK(mass == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("rel_entropy of the product coupling is zero") {
    DiscreteMeasure mu = golden_mu(), nu = golden_nu();
    Coupling c = coupling_from_potentials(Potentials::zeros(2, 2), mu, nu);
    CHECK(rel_entropy(c, mu, nu) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("rel_entropy of the golden martingale coupling") {
    // Four-term oracle: 2*(3/8 log(3/2)) + 2*(1/8 log(1/2)).
    const double expected = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
    CHECK(expected == doctest::Approx(0.13081203594113694).epsilon(1e-13));
    CHECK(rel_entropy(golden_coupling(), golden_mu(), golden_nu()) ==
          doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("rel_entropy of the comonotone coupling is log 2") {
    Coupling c{Matrix(2, 2, kNegInf)};
    c.log_weights(0, 0) = std::log(0.5);
    c.log_weights(1, 1) = std::log(0.5);
    CHECK(rel_entropy(c, golden_mu(), golden_nu()) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("dual_objective of zero potentials is zero") {
    CHECK(dual_objective(Potentials::zeros(2, 2), golden_mu(), golden_nu()) ==
          doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("dual_objective equals the linear part when the kernel is normalized") {
    ProblemInstance inst = make_instance(golden_mu(), golden_nu());
    SolveReport rep = solve(inst);
    CompensatedSum linear;
    for (std::size_t i = 0; i < inst.mu.size(); ++i)
        linear.add(inst.mu.weight(i) * rep.potentials.f[i]);
    for (std::size_t j = 0; j < inst.nu.size(); ++j)
        linear.add(inst.nu.weight(j) * rep.potentials.g[j]);
    CHECK(rep.dual == doctest::Approx(linear.value()).epsilon(1e-12));
}

TEST_CASE("weak duality against oracle martingale couplings") {
    GeneratedInstance gen = generate_with_coupling({11, 6, 9, 1.0});
    const ProblemInstance& inst = gen.instance;
    const double oracle_entropy =
        rel_entropy(gen.martingale_coupling, inst.mu, inst.nu);

    std::mt19937_64 eng(99);
    for (int trial = 0; trial < 200; ++trial) {
        Potentials p;
        p.f.resize(inst.mu.size());
        p.g.resize(inst.nu.size());
        p.h.resize(inst.mu.size());
        for (double& v : p.f) v = 2.0 * uniform(eng) - 1.0;
        for (double& v : p.g) v = 2.0 * uniform(eng) - 1.0;
        for (std::size_t i = 0; i < inst.mu.size(); ++i) {
            const double mag = 2.0 * uniform(eng);
            const double x = inst.mu.atom(i);
            p.h[i] = x > 0 ? -mag : (x < 0 ? mag : 2.0 * uniform(eng) - 1.0);
            CHECK(x * p.h[i] <= 0.0);
        }
        CHECK(dual_objective(p, inst.mu, inst.nu) <= oracle_entropy + 1e-10);
    }
}

TEST_CASE("apply_gauge identity and density invariance") {
    GeneratedInstance gen = generate_with_coupling({5, 10, 10, 1.0});
    const ProblemInstance& inst = gen.instance;
    SolveReport rep = solve(inst);
    const Potentials& p = rep.potentials;

    Potentials same = apply_gauge(p, inst.mu, inst.nu, 0.0, 0.0);
    for (std::size_t i = 0; i < p.f.size(); ++i) CHECK(same.f[i] == p.f[i]);

    Potentials shifted = apply_gauge(p, inst.mu, inst.nu, 1.0, -2.0);
    for (std::size_t i = 0; i < inst.mu.size(); ++i)
        for (std::size_t j = 0; j < inst.nu.size(); ++j) {
            const double d0 = log_density(p, i, j, inst.mu.atoms(), inst.nu.atoms());
            const double d1 =
                log_density(shifted, i, j, inst.mu.atoms(), inst.nu.atoms());
            CHECK(std::abs(d0 - d1) <= 1e-12);
        }
}

TEST_CASE("gauge invariance of the coupling under random shifts") {
    GeneratedInstance gen = generate_with_coupling({21, 7, 9, 1.0});
    const ProblemInstance& inst = gen.instance;
    SolveReport rep = solve(inst);
    Coupling base = coupling_from_potentials(rep.potentials, inst.mu, inst.nu);

    std::mt19937_64 eng(7);
    for (int t = 0; t < 25; ++t) {
        const double alpha = 6.0 * uniform(eng) - 3.0;
        const double beta = 6.0 * uniform(eng) - 3.0;
        Potentials q = apply_gauge(rep.potentials, inst.mu, inst.nu, alpha, beta);
        Coupling c = coupling_from_potentials(q, inst.mu, inst.nu);
        for (std::size_t k = 0; k < base.log_weights.flat().size(); ++k) {
            const double a = std::exp(base.log_weights.flat()[k]);
            const double b = std::exp(c.log_weights.flat()[k]);
            CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("canonical gauge invariants and idempotence") {
    GeneratedInstance gen = generate_with_coupling({31, 8, 12, 1.0});
    const ProblemInstance& inst = gen.instance;
    Potentials raw{{}, {}, {}, Gauge::Raw};
    raw.f.assign(inst.mu.size(), 0.7);
    raw.g.assign(inst.nu.size(), -0.2);
    raw.h.assign(inst.mu.size(), 1.4);

    Potentials c = canonical_gauge(raw, inst.mu, inst.nu);
    CompensatedSum mh, ng;
    for (std::size_t i = 0; i < inst.mu.size(); ++i)
        mh.add(inst.mu.weight(i) * c.h[i]);
    for (std::size_t j = 0; j < inst.nu.size(); ++j)
        ng.add(inst.nu.weight(j) * c.g[j]);
    CHECK(std::abs(mh.value()) <= 1e-10);
    CHECK(std::abs(ng.value()) <= 1e-10);
    CHECK(c.gauge == Gauge::Canonical);

    Potentials cc = canonical_gauge(c, inst.mu, inst.nu);
    for (std::size_t i = 0; i < c.f.size(); ++i) {
        CHECK(std::abs(cc.f[i] - c.f[i]) <= 1e-12);
        CHECK(std::abs(cc.h[i] - c.h[i]) <= 1e-12);
    }
    for (std::size_t j = 0; j < c.g.size(); ++j)
        CHECK(std::abs(cc.g[j] - c.g[j]) <= 1e-12);
}

TEST_CASE("residuals of the product coupling against a centered nu") {
    DiscreteMeasure mu = golden_mu(), nu = golden_nu();
    Coupling c = coupling_from_potentials(Potentials::zeros(2, 2), mu, nu);
    Residuals r = residuals(c, mu, nu);
    // Row barycenter of mu x nu is the nu mean 0, so the defect is |x_i|.
    double expected = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        expected += mu.weight(i) * std::abs(mu.atom(i));
    CHECK(r.martingale == doctest::Approx(expected).epsilon(1e-14));
    CHECK(r.marginal_mu <= 1e-15);
    CHECK(r.marginal_nu <= 1e-15);
    CHECK(r.mass <= 1e-15);
}

TEST_CASE("residuals of an exact martingale coupling") {
    Residuals r = residuals(golden_coupling(), golden_mu(), golden_nu());
    CHECK(r.martingale <= 1e-12);
    CHECK(r.marginal_mu <= 1e-12);
    CHECK(r.marginal_nu <= 1e-12);
    CHECK(r.mass <= 1e-12);
}

TEST_CASE("residuals report a zeroed row in the mu marginal") {
    Coupling c = golden_coupling();
    c.log_weights(0, 0) = kNegInf;
    c.log_weights(0, 1) = kNegInf;
    Residuals r = residuals(c, golden_mu(), golden_nu());
    CHECK(r.marginal_mu == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("entropy formulas agree for potential-built couplings") {
    ProblemInstance inst = make_instance(golden_mu(), golden_nu());
    SolveReport rep = solve(inst);
    Coupling c = coupling_from_potentials(rep.potentials, inst.mu, inst.nu);
    CompensatedSum direct;
    for (std::size_t i = 0; i < inst.mu.size(); ++i)
        for (std::size_t j = 0; j < inst.nu.size(); ++j)
            direct.add(std::exp(c.log_weights(i, j)) *
                       log_density(rep.potentials, i, j, inst.mu.atoms(),
                                   inst.nu.atoms()));
    CHECK(rel_entropy(c, inst.mu, inst.nu) ==
          doctest::Approx(direct.value()).epsilon(1e-12));
}

TEST_CASE("coupling_distance basics") {
    Coupling a = golden_coupling();
    CHECK(coupling_distance(a, a) == 0.0);

    DiscreteMeasure mu = golden_mu(), nu = golden_nu();
    Coupling prod = coupling_from_potentials(Potentials::zeros(2, 2), mu, nu);
    // 1/2 (2|1/4-3/8| + 2|1/4-1/8|) = 1/4.
    CHECK(coupling_distance(prod, a) == doctest::Approx(0.25).epsilon(1e-14));

    Coupling l{Matrix(1, 2, kNegInf)}, r{Matrix(1, 2, kNegInf)};
    l.log_weights(0, 0) = 0.0;
    r.log_weights(0, 1) = 0.0;
    CHECK(coupling_distance(l, r) == doctest::Approx(1.0).epsilon(1e-15));

    Coupling bad{Matrix(3, 2, kNegInf)};
    CHECK_THROWS_AS(coupling_distance(a, bad), ShapeMismatch);
}
