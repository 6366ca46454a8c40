#pragma once

// Unit-strike call in total-variance form,
//
//   c(y, W) = e^y Phi((y + W/2)/sqrt(W)) - Phi((y - W/2)/sqrt(W)),
//
// with BS(u, x, s2) = e^{k} c(x - k, s2 tau_u) and k = ln K - r tau_u. If X is
// Gaussian with mean m and variance v, E[c(X - k + a, W)] = c(m + v/2 - k + a, W + v),
// so every jump-operator integrand averaged over the Brownian part stays closed form.

#include <cmath>
#include <cstddef>
#include <vector>

#include "bns/levy_measure.hpp"
#include "bns/normal.hpp"

namespace bns {

struct CallKernel {
    double c = 0.0;    // value
    double cy = 0.0;   // d/dy
    double cyy = 0.0;  // d^2/dy^2
    double cw = 0.0;   // d/dW
    double cyw = 0.0;  // d^2/dy dW

    static double value(double y, double W) {
        const double sw = std::sqrt(W);
        return std::exp(y) * norm_cdf((y + 0.5 * W) / sw) - norm_cdf((y - 0.5 * W) / sw);
    }

    static CallKernel evaluate(double y, double W) {
        const double sw = std::sqrt(W);
        const double dp = (y + 0.5 * W) / sw;
        const double ey = std::exp(y);
        const double cdf = ey * norm_cdf(dp);
        const double pdf = ey * norm_pdf(dp);
        CallKernel k;
        k.c = cdf - norm_cdf(dp - sw);
        k.cy = cdf;
        k.cyy = cdf + pdf / sw;
        k.cw = 0.5 * pdf / sw;
        k.cyw = k.cw * (1.0 - dp / sw);
        return k;
    }
};

/// Per-node integrand values of the decomposition, all in unit-strike form.
struct JumpTerms {
    CallKernel base;
    double vol_jump = 0.0;    // int [c(y, W + z tau) - c(y, W)] nu(dz)
    double total_jump = 0.0;  // int [c(y + rho z, W + z tau) - c(y + rho z, W)] nu(dz)
    double lbar = 0.0;        // Lbar c
    double lbar_y = 0.0;      // d/dy Lbar c
    double lbar_w = 0.0;      // d/dW Lbar c
};

/// Evaluates nu-integrals of shifted unit-strike calls on a fixed NuRule for a
/// fixed leverage rho.
class JumpKernel {
public:
    JumpKernel(const NuRule& rule, double rho)
        : rho_(rho), z_(rule.nodes()), w_(rule.weights()) {
        shift_.resize(z_.size());
        growth_.resize(z_.size());
        em1_.resize(z_.size());
        for (std::size_t i = 0; i < z_.size(); ++i) {
            shift_[i] = rho * z_[i];
            growth_[i] = std::exp(shift_[i]);
            em1_[i] = std::expm1(shift_[i]);
        }
    }

    double rho() const noexcept { return rho_; }

    /// Lbar c(y, W) = int [c(y + rho z, W) - c(y, W) - c_y(y, W)(e^{rho z} - 1)] nu(dz).
    double lbar(double y, double W) const {
        if (rho_ == 0.0) return 0.0;
        const double sw = std::sqrt(W);
        const double ey = std::exp(y);
        const double dp0 = (y + 0.5 * W) / sw;
        const double cy0 = ey * norm_cdf(dp0);
        const double c0 = cy0 - norm_cdf(dp0 - sw);
        double s = 0.0;
        for (std::size_t i = 0; i < z_.size(); ++i) {
            const double dp = dp0 + shift_[i] / sw;
            const double c = ey * growth_[i] * norm_cdf(dp) - norm_cdf(dp - sw);
            s += w_[i] * (c - c0 - cy0 * em1_[i]);
        }
        return s;
    }

    /// All integrands needed at one time node; tau is the time to maturity there.
    JumpTerms terms(double y, double W, double tau) const {
        JumpTerms out;
        out.base = CallKernel::evaluate(y, W);
        const auto& b = out.base;
        const double sw = std::sqrt(W);
        const double ey = std::exp(y);
        const double dp0 = (y + 0.5 * W) / sw;
        double vol = 0.0, total = 0.0, lb = 0.0, lby = 0.0, lbw = 0.0;
        for (std::size_t i = 0; i < z_.size(); ++i) {
            const double Wz = W + z_[i] * tau;
            const double swz = std::sqrt(Wz);
            const double eys = ey * growth_[i];
            // Shifted price, current variance.
            const double dps = dp0 + shift_[i] / sw;
            const double cdf_s = eys * norm_cdf(dps);
            const double c_s = cdf_s - norm_cdf(dps - sw);
            // Shifted price, shifted variance.
            const double dpj = (y + shift_[i] + 0.5 * Wz) / swz;
            const double c_j = eys * norm_cdf(dpj) - norm_cdf(dpj - swz);
            // Unshifted price, shifted variance.
            const double dpv = (y + 0.5 * Wz) / swz;
            const double c_v = ey * norm_cdf(dpv) - norm_cdf(dpv - swz);

            vol += w_[i] * (c_v - b.c);
            total += w_[i] * (c_j - c_s);
            if (rho_ != 0.0) {
                const double cw_s = 0.5 * eys * norm_pdf(dps) / sw;
                lb += w_[i] * (c_s - b.c - b.cy * em1_[i]);
                lby += w_[i] * (cdf_s - b.cy - b.cyy * em1_[i]);
                lbw += w_[i] * (cw_s - b.cw - b.cyw * em1_[i]);
            }
        }
        out.vol_jump = vol;
        out.total_jump = total;
        out.lbar = lb;
        out.lbar_y = lby;
        out.lbar_w = lbw;
        return out;
    }

private:
    double rho_;
    std::vector<double> z_, w_;
    std::vector<double> shift_, growth_, em1_;
};

}  // namespace bns
