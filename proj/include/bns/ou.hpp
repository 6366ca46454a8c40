#pragma once

#include <cmath>
#include <stdexcept>

namespace bns {

/// OU integration kernel (1 - exp(-lambda t)) / lambda.
///
/// For lambda*t below 1e-8 the truncated series t - lambda t^2/2 + lambda^2 t^3/6
/// is used instead; the closed form loses all digits to cancellation there.
inline double ou_epsilon(double lambda, double t) {
    if (t < 0.0) throw std::domain_error("ou_epsilon: t must be non-negative");
    const double lt = lambda * t;
    if (lt < 1e-8) return t * (1.0 - 0.5 * lt + lt * lt / 6.0);
    return -std::expm1(-lt) / lambda;
}

/// int_0^t ou_epsilon(lambda, s) ds = (t - eps(t)) / lambda, with a series for small lambda t.
inline double ou_epsilon_integral(double lambda, double t) {
    if (t < 0.0) throw std::domain_error("ou_epsilon_integral: t must be non-negative");
    const double lt = lambda * t;
    if (lt < 1e-4) return t * t * (0.5 - lt / 6.0 + lt * lt / 24.0 - lt * lt * lt / 120.0);
    return (t - ou_epsilon(lambda, t)) / lambda;
}

}  // namespace bns
