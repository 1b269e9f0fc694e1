#pragma once

#include <cmath>

namespace msjlab {

/// Neumaier-compensated running sum. Keeps the rounding error of long
/// mixed-sign series bounded independently of the number of terms.
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(double init) : sum_(init) {}

    CompensatedSum& operator+=(double x) noexcept {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
        return *this;
    }

    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// |a - b| / max(|a|, |b|), or 0 when both are zero.
inline double relative_difference(double a, double b) noexcept {
    const double scale = std::fmax(std::fabs(a), std::fabs(b));
    return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

}  // namespace msjlab
