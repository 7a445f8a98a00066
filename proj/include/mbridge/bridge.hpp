#ifndef MBRIDGE_BRIDGE_HPP
#define MBRIDGE_BRIDGE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "mbridge/measures.hpp"

namespace mbridge {

/// Dense row-major matrix, just large enough for desk-scale couplings.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> flat() const { return data_; }
    std::span<double> flat() { return data_; }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

enum class Gauge { Raw, Canonical };

/// Dual variables: f on mu atoms, g on nu atoms, h on mu atoms.
/// In the Canonical gauge sum_i mu_i h_i = 0 and sum_j nu_j g_j = 0.
struct Potentials {
    std::vector<double> f;
    std::vector<double> g;
    std::vector<double> h;
    Gauge gauge = Gauge::Raw;

    static Potentials zeros(std::size_t n_mu, std::size_t n_nu) {
        return Potentials{std::vector<double>(n_mu, 0.0),
                          std::vector<double>(n_nu, 0.0),
                          std::vector<double>(n_mu, 0.0), Gauge::Canonical};
    }
};

/// A coupling stored as log weights (log pi_ij, -inf encodes exact zero).
struct Coupling {
    Matrix log_weights;
};

struct Residuals {
    double marginal_mu = 0.0;  // L1 distance of row sums to mu
    double marginal_nu = 0.0;  // L1 distance of column sums to nu
    double martingale = 0.0;   // sum_i |sum_j pi_ij (y_j - x_i)|
    double mass = 0.0;         // |total mass - 1|

    double max() const;
};

/// log d(pi)/d(mu x nu) at (i, j): f_i + g_j - h_i (y_j - x_i).
double log_density(const Potentials& p, std::size_t i, std::size_t j,
                   std::span<const double> x, std::span<const double> y);

/// log pi_ij = log mu_i + log nu_j + log_density. No normalization.
Coupling coupling_from_potentials(const Potentials& p, const DiscreteMeasure& mu,
                                  const DiscreteMeasure& nu);

/// H(pi | mu x nu) = sum pi_ij (log pi_ij - log mu_i - log nu_j),
/// with the 0 log 0 = 0 convention.
double rel_entropy(const Coupling& c, const DiscreteMeasure& mu,
                   const DiscreteMeasure& nu);

/// sum_i mu_i f_i + sum_j nu_j g_j - log sum_ij mu_i nu_j e^{log_density}.
double dual_objective(const Potentials& p, const DiscreteMeasure& mu,
                      const DiscreteMeasure& nu);

/// The affine shift (f, g, h) -> (f + ax + b, g - ay - b, h - a); the
/// log density is unchanged entrywise.
Potentials apply_gauge(const Potentials& p, const DiscreteMeasure& mu,
                       const DiscreteMeasure& nu, double alpha, double beta);

/// Projects onto the Canonical gauge: alpha = sum_i mu_i h_i, then
/// beta = sum_j nu_j g_j after the alpha shift.
Potentials canonical_gauge(const Potentials& p, const DiscreteMeasure& mu,
                           const DiscreteMeasure& nu);

Residuals residuals(const Coupling& c, const DiscreteMeasure& mu,
                    const DiscreteMeasure& nu);

/// Total variation distance (1/2) sum |e^a - e^b|. Throws ShapeMismatch.
double coupling_distance(const Coupling& a, const Coupling& b);

}  // namespace mbridge

#endif  // MBRIDGE_BRIDGE_HPP
