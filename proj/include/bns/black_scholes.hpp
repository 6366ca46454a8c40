#pragma once

// Black-Scholes call as a function of (t, log-price x, squared volatility),
// its partial derivatives, and the jump operators built on top of it.

#include <cmath>
#include <stdexcept>

#include "bns/levy_measure.hpp"
#include "bns/normal.hpp"
#include "bns/quadrature.hpp"

namespace bns {

/// One evaluation point (t, x, sigma^2) for a call with strike K, rate r, maturity T.
struct BsPoint {
    double t = 0.0;
    double x = 0.0;       // log-price
    double sigma2 = 0.0;  // squared volatility
    double K = 0.0;
    double r = 0.0;
    double T = 0.0;

    double tau() const noexcept { return T - t; }

    void validate() const {
        if (!(sigma2 > 0.0)) throw std::invalid_argument("BsPoint: sigma2 must be positive");
        if (!(K > 0.0)) throw std::invalid_argument("BsPoint: K must be positive");
        if (!(r >= 0.0)) throw std::invalid_argument("BsPoint: r must be non-negative");
        if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("BsPoint: need 0 <= t <= T");
        if (!std::isfinite(x)) throw std::invalid_argument("BsPoint: x must be finite");
    }

    BsPoint shifted(double dx, double dsigma2) const {
        BsPoint q = *this;
        q.x += dx;
        q.sigma2 += dsigma2;
        return q;
    }
};

/// d^{+-}, d^{+-}_{rho z} (price shift only) and d^{+-}_{rho z, z} (price and variance shift).
struct ShiftedArgs {
    double d_plus = 0.0, d_minus = 0.0;
    double d_plus_rz = 0.0, d_minus_rz = 0.0;
    double d_plus_rzz = 0.0, d_minus_rzz = 0.0;
};

namespace detail {

inline void require_positive_tau(const BsPoint& p, const char* who) {
    if (!(p.tau() > 0.0)) throw std::domain_error(std::string(who) + ": undefined at maturity (tau = 0)");
}

inline double d_plus(double x, double sigma2, double K, double r, double tau) {
    const double sd = std::sqrt(sigma2 * tau);
    return (x - std::log(K) + (r + 0.5 * sigma2) * tau) / sd;
}

// Price with time-to-maturity tau >= 0 passed directly.
inline double bs_price_tau(double x, double sigma2, double K, double r, double tau) {
    if (tau <= 0.0) return std::max(std::exp(x) - K, 0.0);
    const double sd = std::sqrt(sigma2 * tau);
    const double dp = d_plus(x, sigma2, K, r, tau);
    return std::exp(x) * norm_cdf(dp) - K * std::exp(-r * tau) * norm_cdf(dp - sd);
}

// x-derivatives of BS of order 1..3 and the mixed x/sigma^2 derivatives.
struct BsGreeks {
    double dx, dxx, dxxx, ds2, dxs2;
};

inline BsGreeks bs_greeks(double x, double sigma2, double K, double r, double tau) {
    const double sd = std::sqrt(sigma2 * tau);
    const double dp = d_plus(x, sigma2, K, r, tau);
    const double ex = std::exp(x);
    const double cdf = ex * norm_cdf(dp);
    const double pdf = ex * norm_pdf(dp);
    BsGreeks g{};
    g.dx = cdf;
    g.dxx = cdf + pdf / sd;
    g.dxxx = cdf + 2.0 * pdf / sd - pdf * dp / (sd * sd);
    g.ds2 = std::sqrt(tau) / (2.0 * std::sqrt(sigma2)) * pdf;
    g.dxs2 = g.ds2 * (1.0 - dp / sd);
    return g;
}

}  // namespace detail

inline ShiftedArgs shifted_args(const BsPoint& p, double rho, double z) {
    detail::require_positive_tau(p, "shifted_args");
    const double tau = p.tau();
    const double sd = std::sqrt(p.sigma2 * tau);
    ShiftedArgs s;
    s.d_plus = detail::d_plus(p.x, p.sigma2, p.K, p.r, tau);
    s.d_minus = s.d_plus - sd;
    s.d_plus_rz = s.d_plus + rho * z / sd;
    s.d_minus_rz = s.d_minus + rho * z / sd;
    const double sdz = std::sqrt((p.sigma2 + z) * tau);
    s.d_plus_rzz = detail::d_plus(p.x + rho * z, p.sigma2 + z, p.K, p.r, tau);
    s.d_minus_rzz = s.d_plus_rzz - sdz;
    return s;
}

/// Call price; (e^x - K)^+ at t = T.
inline double bs_price(const BsPoint& p) {
    return detail::bs_price_tau(p.x, p.sigma2, p.K, p.r, p.tau());
}

struct BsPartials {
    double d_x = 0.0;
    double d_xx = 0.0;
    double d_sigma2 = 0.0;
    double d_t = 0.0;
};

/// Closed-form partials. The time derivative comes from the pricing PDE
/// (d_t + sigma^2/2 d_xx + (r - sigma^2/2) d_x - r) BS = 0.
inline BsPartials bs_partials(const BsPoint& p) {
    detail::require_positive_tau(p, "bs_partials");
    const auto g = detail::bs_greeks(p.x, p.sigma2, p.K, p.r, p.tau());
    BsPartials out;
    out.d_x = g.dx;
    out.d_xx = g.dxx;
    out.d_sigma2 = g.ds2;
    out.d_t = p.r * bs_price(p) - 0.5 * p.sigma2 * g.dxx - (p.r - 0.5 * p.sigma2) * g.dx;
    return out;
}

/// Pricing-PDE residual with a central finite difference for d_t and analytic
/// spatial derivatives. Error is O(step^2).
inline double dbs_residual(const BsPoint& p, double dt_fd_step) {
    if (!(dt_fd_step > 0.0) || !(p.tau() > dt_fd_step)) {
        throw std::domain_error("dbs_residual: step must be positive and smaller than tau");
    }
    const double tau = p.tau();
    const double up = detail::bs_price_tau(p.x, p.sigma2, p.K, p.r, tau - dt_fd_step);
    const double dn = detail::bs_price_tau(p.x, p.sigma2, p.K, p.r, tau + dt_fd_step);
    const double dt = (up - dn) / (2.0 * dt_fd_step);
    const auto g = detail::bs_greeks(p.x, p.sigma2, p.K, p.r, tau);
    return dt + 0.5 * p.sigma2 * g.dxx + (p.r - 0.5 * p.sigma2) * g.dx - p.r * bs_price(p);
}

/// e^x phi(d+) - K e^{-r tau} phi(d-), identically zero in exact arithmetic.
inline double phi_identity_gap(const BsPoint& p) {
    const auto s = shifted_args(p, 0.0, 0.0);
    return std::exp(p.x) * norm_pdf(s.d_plus) - p.K * std::exp(-p.r * p.tau()) * norm_pdf(s.d_minus);
}

/// Delta^{a,b} BS = BS(t, x + a, sigma^2 + b) - BS(t, x, sigma^2).
inline double delta_shift(const BsPoint& p, double a, double b) {
    if (!(p.sigma2 + b > 0.0)) throw std::domain_error("delta_shift: sigma2 + b must be positive");
    return bs_price(p.shifted(a, b)) - bs_price(p);
}

/// L^z BS = Delta^{rho z, 0} BS + d_x BS (1 - e^{rho z}).
inline double l_z_bs(const BsPoint& p, double rho, double z) {
    detail::require_positive_tau(p, "l_z_bs");
    if (!(z > 0.0)) throw std::domain_error("l_z_bs: z must be positive");
    const auto g = detail::bs_greeks(p.x, p.sigma2, p.K, p.r, p.tau());
    return delta_shift(p, rho * z, 0.0) - g.dx * std::expm1(rho * z);
}

/// Same quantity written as
/// e^{x + rho z}(Phi(d+_{rho z}) - Phi(d+)) - K e^{-r tau}(Phi(d-_{rho z}) - Phi(d-)).
inline double l_z_bs_expanded(const BsPoint& p, double rho, double z) {
    const auto s = shifted_args(p, rho, z);
    return std::exp(p.x + rho * z) * (norm_cdf(s.d_plus_rz) - norm_cdf(s.d_plus)) -
           p.K * std::exp(-p.r * p.tau()) * (norm_cdf(s.d_minus_rz) - norm_cdf(s.d_minus));
}

/// Lbar BS = int L^z BS nu(dz). Exactly zero for rho = 0.
inline QuadratureResult lbar_bs(const BsPoint& p, double rho, const LevyMeasureSpec& nu, double tol = 1e-7) {
    detail::require_positive_tau(p, "lbar_bs");
    if (rho == 0.0) return {0.0, 0.0, 1};
    const double tau = p.tau();
    const double base = bs_price(p);
    const double dx = detail::bs_greeks(p.x, p.sigma2, p.K, p.r, tau).dx;
    return integrate_against_nu(
        nu,
        [&](double z) {
            return detail::bs_price_tau(p.x + rho * z, p.sigma2, p.K, p.r, tau) - base - dx * std::expm1(rho * z);
        },
        tol);
}

struct LbarPartials {
    QuadratureResult d_x;
    QuadratureResult d_xx;
    QuadratureResult d_sigma2;
};

/// Partials of Lbar BS computed as Lbar applied to the partials of BS; the
/// interchange of derivative and nu-integral holds for sigma^2 bounded below.
inline LbarPartials lbar_bs_partials(const BsPoint& p, double rho, const LevyMeasureSpec& nu, double tol = 1e-7) {
    detail::require_positive_tau(p, "lbar_bs_partials");
    LbarPartials out;
    if (rho == 0.0) {
        out.d_x = out.d_xx = out.d_sigma2 = {0.0, 0.0, 1};
        return out;
    }
    const double tau = p.tau();
    const auto g0 = detail::bs_greeks(p.x, p.sigma2, p.K, p.r, tau);
    auto shifted = [&](double z) { return detail::bs_greeks(p.x + rho * z, p.sigma2, p.K, p.r, tau); };
    out.d_x = integrate_against_nu(
        nu, [&](double z) { return shifted(z).dx - g0.dx - g0.dxx * std::expm1(rho * z); }, tol);
    out.d_xx = integrate_against_nu(
        nu, [&](double z) { return shifted(z).dxx - g0.dxx - g0.dxxx * std::expm1(rho * z); }, tol);
    out.d_sigma2 = integrate_against_nu(
        nu, [&](double z) { return shifted(z).ds2 - g0.ds2 - g0.dxs2 * std::expm1(rho * z); }, tol);
    return out;
}

/// Delta^{rho z, z} Lbar BS = Lbar BS(t, x + rho z, sigma^2 + z) - Lbar BS(t, x, sigma^2).
inline double delta_shift_lbar(const BsPoint& p, double rho, const LevyMeasureSpec& nu, double z,
                               double tol = 1e-9) {
    if (!(z > 0.0)) throw std::domain_error("delta_shift_lbar: z must be positive");
    if (rho == 0.0) return 0.0;
    return lbar_bs(p.shifted(rho * z, z), rho, nu, tol).value - lbar_bs(p, rho, nu, tol).value;
}

/// The same difference through the double-integral representation
///
///   rho e^x / sqrt(tau) int nu(dw) int_0^w (e^{rho w} - e^{rho s})
///       [ e^{rho z} / sigma_z phi(d+_{rho z + rho s, z}) - phi(d+_{rho s}) / sigma ] ds,
///
/// which follows from e^x phi(d+) = K e^{-r tau} phi(d-). Independent of the
/// direct route above; used to cross-check it.
inline double delta_shift_lbar_double_integral(const BsPoint& p, double rho, const LevyMeasureSpec& nu, double z,
                                               double tol = 1e-9) {
    detail::require_positive_tau(p, "delta_shift_lbar_double_integral");
    if (!(z > 0.0)) throw std::domain_error("delta_shift_lbar_double_integral: z must be positive");
    if (rho == 0.0) return 0.0;
    const double tau = p.tau();
    const double sigma = std::sqrt(p.sigma2);
    const double sigma_z = std::sqrt(p.sigma2 + z);
    auto inner = [&](double w) {
        const double erw = std::exp(rho * w);
        auto g = [&](double s) {
            const double dz = detail::d_plus(p.x + rho * z + rho * s, p.sigma2 + z, p.K, p.r, tau);
            const double d0 = detail::d_plus(p.x + rho * s, p.sigma2, p.K, p.r, tau);
            return (erw - std::exp(rho * s)) *
                   (std::exp(rho * z) / sigma_z * norm_pdf(dz) - norm_pdf(d0) / sigma);
        };
        // Integrand is O(w^2) in w; scale the tolerance so the outer integral sees O(tol).
        return integrate_adaptive(g, 0.0, w, AdaptiveOptions{tol * std::min(1.0, w * w) + 1e-300, 200000}).value;
    };
    const auto outer = integrate_against_nu(nu, inner, tol * std::sqrt(tau) / (std::abs(rho) * std::exp(p.x)));
    return rho * std::exp(p.x) / std::sqrt(tau) * outer.value;
}

}  // namespace bns
