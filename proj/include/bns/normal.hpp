#pragma once

#include <cmath>
#include <numbers>

namespace bns {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

/// Standard normal density.
inline double norm_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Standard normal CDF through erfc, so the lower tail keeps full relative accuracy.
inline double norm_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace bns
