#pragma once

// Levy measures of the background driving subordinator for the two OU variance
// models supported here (IG-OU and Gamma-OU), plus integration against them.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "bns/ou.hpp"
#include "bns/quadrature.hpp"

namespace bns {

enum class MeasureKind { InverseGaussianOU, GammaOU };

inline const char* to_string(MeasureKind k) {
    return k == MeasureKind::InverseGaussianOU ? "IG_OU" : "GAMMA_OU";
}

/// Levy measure nu of the time-changed subordinator H_{lambda t}.
///
/// IG-OU:    nu(dz) = lambda a / (2 sqrt(2 pi)) z^{-3/2} (1 + b^2 z) exp(-b^2 z / 2) dz
/// Gamma-OU: nu(dz) = lambda a b exp(-b z) dz
///
/// lambda is the OU mean-reversion rate; it is stored here once and the model
/// reads it back from the measure.
class LevyMeasureSpec {
public:
    LevyMeasureSpec(MeasureKind kind, double lambda, double a, double b)
        : kind_(kind), lambda_(lambda), a_(a), b_(b) {
        if (!(lambda > 0.0) || !(a > 0.0) || !(b > 0.0) || !std::isfinite(lambda) ||
            !std::isfinite(a) || !std::isfinite(b)) {
            throw std::invalid_argument("LevyMeasureSpec: lambda, a and b must be positive and finite");
        }
    }

    static LevyMeasureSpec ig_ou(double lambda, double a, double b) {
        return {MeasureKind::InverseGaussianOU, lambda, a, b};
    }
    static LevyMeasureSpec gamma_ou(double lambda, double a, double b) {
        return {MeasureKind::GammaOU, lambda, a, b};
    }

    MeasureKind kind() const noexcept { return kind_; }
    double lambda() const noexcept { return lambda_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    bool infinite_activity() const noexcept { return kind_ == MeasureKind::InverseGaussianOU; }

    /// Exponential decay rate c of the density, nu(dz) ~ exp(-c z) as z -> inf.
    double decay_rate() const noexcept { return is_ig() ? 0.5 * b_ * b_ : b_; }

    double density(double z) const {
        if (!(z > 0.0)) throw std::domain_error("LevyMeasureSpec::density: z must be positive");
        if (is_ig()) {
            return ig_scale() / (2.0 * z * std::sqrt(z)) * (1.0 + b_ * b_ * z) * std::exp(-0.5 * b_ * b_ * z);
        }
        return lambda_ * a_ * b_ * std::exp(-b_ * z);
    }

    /// nu((z, inf)). Closed form for both variants; for IG the two Gamma-function
    /// pieces collapse to lambda a / sqrt(2 pi) z^{-1/2} exp(-b^2 z / 2).
    double tail_mass(double z) const {
        if (!(z > 0.0)) throw std::domain_error("LevyMeasureSpec::tail_mass: z must be positive");
        if (is_ig()) return ig_scale() / std::sqrt(z) * std::exp(-0.5 * b_ * b_ * z);
        return lambda_ * a_ * std::exp(-b_ * z);
    }

    /// Inverse of tail_mass on (0, inf): the z with nu((z, inf)) = y.
    double inverse_tail_mass(double y) const {
        if (!(y > 0.0)) throw std::domain_error("LevyMeasureSpec::inverse_tail_mass: y must be positive");
        if (!is_ig()) {
            const double z = std::log(lambda_ * a_ / y) / b_;
            if (!(z >= 0.0)) throw std::domain_error("LevyMeasureSpec::inverse_tail_mass: y exceeds total mass");
            return z;
        }
        // Solve g(z) = -0.5 ln z - c z - ln(y / s) = 0; g is strictly decreasing and convex.
        const double c = decay_rate();
        const double target = std::log(y / ig_scale());
        double z = std::exp(-2.0 * target);  // root when c = 0, always an upper bound
        double lo = 0.0, hi = z;
        for (int it = 0; it < 200; ++it) {
            const double g = -0.5 * std::log(z) - c * z - target;
            if (g > 0.0) lo = z; else hi = z;
            const double dg = -0.5 / z - c;
            double next = z - g / dg;
            if (!(next > lo && next < hi)) next = lo > 0.0 ? 0.5 * (lo + hi) : 0.5 * hi;
            if (std::abs(next - z) <= 1e-15 * z) return next;
            z = next;
        }
        throw std::runtime_error("LevyMeasureSpec::inverse_tail_mass: no convergence");
    }

    double total_mass() const noexcept {
        return is_ig() ? std::numeric_limits<double>::infinity() : lambda_ * a_;
    }

    /// int z^order nu(dz) for order 1 or 2.
    double moment(int order) const {
        switch (order) {
            case 1:
                return lambda_ * a_ / b_;
            case 2:
                return is_ig() ? 2.0 * lambda_ * a_ / (b_ * b_ * b_) : 2.0 * lambda_ * a_ / (b_ * b_);
            default:
                throw std::invalid_argument("LevyMeasureSpec::moment: order must be 1 or 2");
        }
    }

    /// int_0^eps z nu(dz): mean mass per unit time of jumps no larger than eps.
    double truncated_first_moment(double eps) const {
        if (!(eps >= 0.0)) throw std::domain_error("truncated_first_moment: eps must be non-negative");
        if (eps == 0.0) return 0.0;
        using boost::math::gamma_p;
        if (is_ig()) {
            const double x = decay_rate() * eps;
            return 0.5 * lambda_ * a_ / b_ * (gamma_p(0.5, x) + gamma_p(1.5, x));
        }
        return lambda_ * a_ / b_ * gamma_p(2.0, b_ * eps);
    }

    /// Draws Z with law z nu(dz) / int z nu(dz).
    ///
    /// Gamma-OU gives Gamma(2, rate b); IG-OU gives an equal-weight mixture of
    /// Gamma(1/2, rate b^2/2) and Gamma(3/2, rate b^2/2).
    template <class Urbg>
    double sample_size_biased(Urbg& g) const {
        const double scale = 1.0 / decay_rate();
        if (!is_ig()) return std::gamma_distribution<double>(2.0, scale)(g);
        const bool low = std::uniform_real_distribution<double>(0.0, 1.0)(g) < 0.5;
        return std::gamma_distribution<double>(low ? 0.5 : 1.5, scale)(g);
    }

private:
    bool is_ig() const noexcept { return kind_ == MeasureKind::InverseGaussianOU; }
    double ig_scale() const noexcept { return lambda_ * a_ / std::sqrt(2.0 * std::numbers::pi); }

    MeasureKind kind_;
    double lambda_, a_, b_;
};

/// Result of the exponential-moment condition int_1^inf exp(2 eps(T) z) nu(dz) < inf,
/// in the sufficient form b^2/2 > 2 eps(T) (IG) or b > 2 eps(T) (Gamma).
struct TailCondition {
    bool holds = false;
    double slack = 0.0;  // left side minus right side
};

/// Equality counts as failure.
inline TailCondition tail_condition(const LevyMeasureSpec& nu, double T) {
    if (!(T > 0.0)) throw std::domain_error("tail_condition: T must be positive");
    const double rhs = 2.0 * ou_epsilon(nu.lambda(), T);
    const double slack = nu.decay_rate() - rhs;
    return {slack > 0.0, slack};
}

namespace detail {

/// Split point between the finite panel and the mapped exponential tail.
inline double nu_split_point(const LevyMeasureSpec& nu) { return 16.0 / nu.decay_rate(); }

// Density of nu in the u = sqrt(z) coordinate: nu(dz) = w(u) du with z = u^2.
// For IG the 1/u^2 factor is left to the caller to cancel against an O(z) integrand.
inline double nu_density_sqrt_coordinate(const LevyMeasureSpec& nu, double u) {
    return nu.density(u * u) * 2.0 * u;
}

}  // namespace detail

/// int_0^inf f(z) nu(dz).
///
/// The caller guarantees |f(z)| <= C (z ^ 1) near zero (only needed for IG, whose
/// total mass is infinite) and exponential domination at infinity within the
/// integrability envelope of nu. The integral is split at z* = 16 / c: on (0, z*]
/// the substitution z = u^2 removes the z^{-1/2} endpoint behaviour, and the tail
/// is mapped to (0, 1] by z = z* - ln(v) / c. `tol` bounds the absolute error.
template <class F>
QuadratureResult integrate_against_nu(const LevyMeasureSpec& nu, F&& f, double tol = 1e-7,
                                      std::size_t max_evaluations = 400000) {
    if (!(tol > 0.0)) throw std::invalid_argument("integrate_against_nu: tol must be positive");

    // Cheap contract probe: catches obviously divergent integrands, proves nothing.
    const double probes[] = {1e-8, 1e-4, 1.0, 10.0};
    double fp[4];
    for (int i = 0; i < 4; ++i) {
        fp[i] = f(probes[i]);
        if (!std::isfinite(fp[i]) || !std::isfinite(fp[i] * nu.density(probes[i]))) {
            throw std::invalid_argument("integrate_against_nu: integrand not finite at probe z = " +
                                        std::to_string(probes[i]));
        }
    }
    if (nu.infinite_activity()) {
        const double near = std::abs(fp[0]) / probes[0];
        const double ref = std::max({1.0, std::abs(fp[1]) / probes[1], std::abs(fp[2])});
        if (near > 1e3 * ref) {
            throw std::invalid_argument("integrate_against_nu: integrand does not vanish like O(z) at 0");
        }
    }

    const double zs = detail::nu_split_point(nu);
    const double c = nu.decay_rate();
    AdaptiveOptions opts{0.5 * tol, max_evaluations / 2};

    QuadratureResult head;
    QuadratureResult tail;
    try {
        head = integrate_adaptive(
            [&](double u) {
                if (u <= 0.0) return 0.0;
                return f(u * u) * detail::nu_density_sqrt_coordinate(nu, u);
            },
            0.0, std::sqrt(zs), opts);
        tail = integrate_adaptive(
            [&](double v) {
                if (v <= 0.0) return 0.0;
                const double z = zs - std::log(v) / c;
                const double w = nu.density(z) / (c * v);
                return w == 0.0 ? 0.0 : f(z) * w;
            },
            0.0, 1.0, opts);
    } catch (const QuadratureError& e) {
        QuadratureResult partial = head;
        partial += e.partial();
        throw QuadratureError(std::string("integrate_against_nu: ") + e.what(), partial);
    }
    head += tail;
    head.evaluations += 4;
    return head;
}

/// Fixed node set approximating int f(z) nu(dz) by sum_i w_i f(z_i).
///
/// Same geometry as integrate_against_nu (sqrt substitution on (0, z*], mapped
/// exponential tail), with equal Gauss-Legendre panels in u = sqrt(z). Used in hot
/// loops where adaptive integration per evaluation point is too slow.
class NuRule {
public:
    struct Layout {
        unsigned panels = 8;
        unsigned nodes_per_panel = 8;
        unsigned tail_nodes = 8;
    };

    NuRule(const LevyMeasureSpec& nu, Layout layout) {
        const double zs = detail::nu_split_point(nu);
        const double us = std::sqrt(zs);
        const double c = nu.decay_rate();
        const auto gl = gauss_legendre(layout.nodes_per_panel);
        for (unsigned p = 0; p < layout.panels; ++p) {
            const double lo = us * p / layout.panels;
            const double hi = us * (p + 1) / layout.panels;
            for (std::size_t i = 0; i < gl.size(); ++i) {
                const double u = lo + 0.5 * (hi - lo) * (gl.nodes[i] + 1.0);
                nodes_.push_back(u * u);
                weights_.push_back(0.5 * (hi - lo) * gl.weights[i] * detail::nu_density_sqrt_coordinate(nu, u));
            }
        }
        const auto gt = gauss_legendre(layout.tail_nodes);
        for (std::size_t i = 0; i < gt.size(); ++i) {
            const double v = 0.5 * (gt.nodes[i] + 1.0);
            const double z = zs - std::log(v) / c;
            nodes_.push_back(z);
            weights_.push_back(0.5 * gt.weights[i] * nu.density(z) / (c * v));
        }
    }

    explicit NuRule(const LevyMeasureSpec& nu) : NuRule(nu, Layout{}) {}

    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(nodes_[i]);
        return s;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

}  // namespace bns
