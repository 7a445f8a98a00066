#ifndef MBRIDGE_MEASURES_HPP
#define MBRIDGE_MEASURES_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace mbridge {

/// A finitely supported probability measure on the real line.
/// Atoms are strictly increasing, weights are strictly positive and sum
/// to 1. Construct through validate_measure().
class DiscreteMeasure {
  public:
    /// Defaults to the point mass at 0.
    DiscreteMeasure() : atoms_{0.0}, weights_{1.0} {}

    const std::vector<double>& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return atoms_.size(); }
    double atom(std::size_t i) const { return atoms_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    double min_atom() const { return atoms_.front(); }
    double max_atom() const { return atoms_.back(); }
    double mean() const;

    /// Copy with every atom shifted by -s.
    DiscreteMeasure shifted(double s) const;

  private:
    DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights)
        : atoms_(std::move(atoms)), weights_(std::move(weights)) {}

    friend DiscreteMeasure validate_measure(std::vector<double> atoms,
                                            std::vector<double> weights);

    std::vector<double> atoms_;
    std::vector<double> weights_;
};

/// Sorts atoms, merges exact duplicates (summing weights), and
/// renormalizes the weights when their sum is within 1e-9 of 1.
/// Throws EmptySupport, ShapeMismatch, NonPositiveWeight, NotNormalized.
DiscreteMeasure validate_measure(std::vector<double> atoms,
                                 std::vector<double> weights);

/// phi_rho(x) = sum_i w_i |x - y_i|. Convex, piecewise linear with kinks
/// at the atoms; equals |x - mean| outside the support hull.
double potential_fn(const DiscreteMeasure& rho, double x);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct FeasibilityReport {
    bool means_equal = false;
    bool convex_order = false;
    bool irreducible = false;
    bool endpoint_assumption = false;
    /// Maximal open interval of strict potential inequality containing the
    /// mu mean. Present iff convex_order holds; lo == hi encodes an empty
    /// interval.
    std::optional<Interval> interval_I;
    std::vector<std::string> detail;
};

struct CenteredPair {
    DiscreteMeasure mu;
    DiscreteMeasure nu;
    double shift = 0.0;
};

/// Shifts both measures to mean zero. The measures must have the same
/// mean within 1e-9 (throws MeanMismatch otherwise); each is centered at
/// its own mean so the zero-mean postcondition holds to 1e-12, and the
/// reported shift is the mu mean.
CenteredPair center_pair(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Evaluates convex order, irreducibility and the endpoint condition for
/// a centered pair. Never throws; all verdicts live in the report.
FeasibilityReport check_feasibility(const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu);

/// A validated, centered (mu, nu) pair with feasibility metadata.
struct ProblemInstance {
    DiscreteMeasure mu;
    DiscreteMeasure nu;
    FeasibilityReport feasibility;
    double shift = 0.0;
};

/// Validates, centers (when the means agree) and checks feasibility.
/// Mean-mismatched pairs are returned uncentered with convex_order false
/// rather than throwing, so callers can surface the full report.
ProblemInstance make_instance(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu);

}  // namespace mbridge

#endif  // MBRIDGE_MEASURES_HPP
