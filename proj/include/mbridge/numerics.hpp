#ifndef MBRIDGE_NUMERICS_HPP
#define MBRIDGE_NUMERICS_HPP

#include <cmath>
#include <limits>
#include <span>

namespace mbridge {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Neumaier-compensated accumulator. Summation order is the caller's
/// iteration order, so results are independent of thread count as long
/// as reductions stay serial.
class CompensatedSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    CompensatedSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

/// Max-shifted log(sum(exp(a_k))). Entries equal to -inf contribute
/// nothing; an all -inf input yields -inf.
inline double log_sum_exp(std::span<const double> a) {
    double m = kNegInf;
    for (double v : a) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    CompensatedSum acc;
    for (double v : a) acc.add(std::exp(v - m));
    return m + std::log(acc.value());
}

}  // namespace mbridge

#endif  // MBRIDGE_NUMERICS_HPP
