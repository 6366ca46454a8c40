#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

namespace bns {

struct QuadratureResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    std::size_t evaluations = 0;

    QuadratureResult& operator+=(const QuadratureResult& o) {
        value += o.value;
        abs_error_estimate += o.abs_error_estimate;
        evaluations += o.evaluations;
        return *this;
    }
};

/// Thrown when an adaptive integration exhausts its budget; carries what it had.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, QuadratureResult partial)
        : std::runtime_error(what), partial_(partial) {}
    const QuadratureResult& partial() const noexcept { return partial_; }

private:
    QuadratureResult partial_;
};

/// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

inline GaussRule gauss_legendre(unsigned n) {
    if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
    GaussRule rule;
    // legendre_p_zeros returns the non-negative roots, ascending, zero first for odd n.
    const auto zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
    std::vector<double> x;
    for (double z : zeros) {
        if (z == 0.0) {
            x.push_back(0.0);
        } else {
            x.push_back(z);
            x.push_back(-z);
        }
    }
    std::sort(x.begin(), x.end());
    for (double xi : x) {
        const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(n), xi);
        rule.nodes.push_back(xi);
        rule.weights.push_back(2.0 / ((1.0 - xi * xi) * dp * dp));
    }
    return rule;
}

struct AdaptiveOptions {
    double abs_tol = 1e-9;
    std::size_t max_evaluations = 200000;
};

namespace detail {

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15_panel(F& f, double a, double b) {
    using kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
    using gauss = boost::math::quadrature::gauss<double, 7>;
    const auto& xk = kronrod::abscissa();
    const auto& wk = kronrod::weights();
    const auto& wg = gauss::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const double f0 = f(mid);
    double k = wk[0] * f0;
    double g = wg[0] * f0;
    for (std::size_t i = 1; i < xk.size(); ++i) {
        const double fsum = f(mid - half * xk[i]) + f(mid + half * xk[i]);
        k += wk[i] * fsum;
        // Even-indexed Kronrod abscissae coincide with the Gauss-7 nodes.
        if (i % 2 == 0) g += wg[i / 2] * fsum;
    }
    return Panel{a, b, k * half, std::abs((k - g) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval.
///
/// Bisects the panel with the largest error estimate until the summed estimate
/// drops below `opts.abs_tol`, or below 1e-14 of the magnitude of the result when
/// the requested tolerance is under double-precision roundoff. Throws
/// QuadratureError when the evaluation budget runs out or the integrand returns a
/// non-finite value.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, const AdaptiveOptions& opts = {}) {
    QuadratureResult out;
    if (a == b) return out;
    if (!(a < b)) throw std::invalid_argument("integrate_adaptive: need a < b");

    std::size_t evals = 0;
    auto counted = [&](double x) {
        ++evals;
        return f(x);
    };

    std::priority_queue<detail::Panel> heap;
    heap.push(detail::gk15_panel(counted, a, b));
    double total = heap.top().value;
    double err = heap.top().error;

    auto target = [&] { return std::max(opts.abs_tol, 1e-14 * std::abs(total)); };
    while (err > target()) {
        const auto worst = heap.top();
        const double m = 0.5 * (worst.a + worst.b);
        if (evals + 30 > opts.max_evaluations || !(worst.a < m && m < worst.b)) {
            throw QuadratureError("integrate_adaptive: budget exhausted before reaching tolerance",
                                  QuadratureResult{total, err, evals});
        }
        heap.pop();
        const auto left = detail::gk15_panel(counted, worst.a, m);
        const auto right = detail::gk15_panel(counted, m, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if (!std::isfinite(total)) {
            throw QuadratureError("integrate_adaptive: non-finite integrand value",
                                  QuadratureResult{total, err, evals});
        }
        // Running sums drift; re-add from the panels once the estimate looks converged.
        if (err <= target()) {
            auto copy = heap;
            total = 0.0;
            err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                err += copy.top().error;
                copy.pop();
            }
        }
    }
    if (!std::isfinite(total)) {
        throw QuadratureError("integrate_adaptive: non-finite integrand value",
                              QuadratureResult{total, err, evals});
    }
    out.value = total;
    out.abs_error_estimate = err;
    out.evaluations = evals;
    return out;
}

}  // namespace bns
