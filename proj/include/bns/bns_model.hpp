#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bns/jump_path.hpp"
#include "bns/levy_measure.hpp"
#include "bns/ou.hpp"

namespace bns {

/// Raised when a parameter set violates the model's standing assumptions.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// mu = int (1 - e^{rho z}) nu(dz): the drift that makes e^{-rt} S_t a martingale.
/// Closed form -lambda a rho / (b - rho) for Gamma-OU, quadrature for IG-OU.
inline double derive_mu(const LevyMeasureSpec& nu, double rho, double tol = 1e-13) {
    if (!(rho <= 0.0)) throw std::domain_error("derive_mu: rho must be non-positive");
    if (rho == 0.0) return 0.0;
    if (nu.kind() == MeasureKind::GammaOU) return -nu.lambda() * nu.a() * rho / (nu.b() - rho);
    return integrate_against_nu(nu, [rho](double z) { return -std::expm1(rho * z); }, tol).value;
}

/// (t, X_t, Sigma_t^2).
struct MarketState {
    double t = 0.0;
    double x = 0.0;
    double sigma2 = 0.0;
};

/// Full model parameterization. Construction is the single place where the
/// standing assumptions are enforced; an instance always satisfies them.
class BnsParams {
public:
    BnsParams(double S0, double sigma0_sq, double rho, double r, double T, LevyMeasureSpec measure)
        : S0_(S0), sigma0_sq_(sigma0_sq), rho_(rho), r_(r), T_(T), measure_(measure) {
        if (!(S0 > 0.0)) throw ModelError("S0 must be positive");
        if (!(sigma0_sq > 0.0)) throw ModelError("sigma0^2 must be positive");
        if (!(rho <= 0.0)) throw ModelError("rho must be <= 0 (got " + std::to_string(rho) + ")");
        if (!(r >= 0.0)) throw ModelError("r must be >= 0");
        if (!(T > 0.0)) throw ModelError("T must be positive");
        const auto tc = tail_condition(measure_, T_);
        if (!tc.holds) {
            std::ostringstream os;
            os.precision(17);
            if (measure_.kind() == MeasureKind::InverseGaussianOU) {
                os << "exponential moment condition violated: b^2/2 = " << measure_.decay_rate()
                   << " is not > 2 eps(T) = " << measure_.decay_rate() - tc.slack;
            } else {
                os << "exponential moment condition violated: b = " << measure_.decay_rate()
                   << " is not > 2 eps(T) = " << measure_.decay_rate() - tc.slack;
            }
            throw ModelError(os.str());
        }
        mu_ = derive_mu(measure_, rho_);
    }

    double S0() const noexcept { return S0_; }
    double sigma0_sq() const noexcept { return sigma0_sq_; }
    double rho() const noexcept { return rho_; }
    double lambda() const noexcept { return measure_.lambda(); }
    double r() const noexcept { return r_; }
    double T() const noexcept { return T_; }
    double mu() const noexcept { return mu_; }
    const LevyMeasureSpec& measure() const noexcept { return measure_; }

    /// e^{-lambda T} Sigma_0^2, below which the variance never falls on [0, T].
    double variance_floor() const noexcept { return std::exp(-lambda() * T_) * sigma0_sq_; }

    double tail_slack() const { return tail_condition(measure_, T_).slack; }

    MarketState initial_state() const noexcept { return {0.0, std::log(S0_), sigma0_sq_}; }

    BnsParams with_rho(double rho) const { return {S0_, sigma0_sq_, rho, r_, T_, measure_}; }
    BnsParams with_maturity(double T) const { return {S0_, sigma0_sq_, rho_, r_, T, measure_}; }

private:
    double S0_, sigma0_sq_, rho_, r_, T_;
    LevyMeasureSpec measure_;
    double mu_ = 0.0;
};

/// Deterministic OU flow between jumps.
inline double variance_decay(double sigma2, double lambda, double dt) {
    if (dt < 0.0) throw std::domain_error("variance_decay: dt must be non-negative");
    return std::exp(-lambda * dt) * sigma2;
}

/// Walks a jump path forward in time from a state, giving exact Sigma^2_u,
/// H increments and integrated variance at non-decreasing query times.
class PathCursor {
public:
    struct Snapshot {
        double u = 0.0;
        double sigma2 = 0.0;              // Sigma^2_u
        double jump_sum = 0.0;            // H_{lambda u} - H_{lambda t}, compensation drift included
        double integrated_variance = 0.0; // int_t^u Sigma^2_s ds
    };

    PathCursor(double lambda, const MarketState& start, const JumpPath& path)
        : lambda_(lambda), start_(start), path_(path), u_(start.t), drift_(path.drift_rate()) {}

    Snapshot advance_to(double u) {
        if (u < u_) throw std::domain_error("PathCursor: query times must be non-decreasing");
        while (next_ < path_.size() && path_.times[next_] <= u) {
            step(path_.times[next_]);
            decayed_ += path_.sizes[next_];
            jump_total_ += path_.sizes[next_];
            ++next_;
        }
        step(u);
        const double dt = u - start_.t;
        Snapshot s;
        s.u = u;
        s.sigma2 = std::exp(-lambda_ * dt) * start_.sigma2 + drift_ * ou_epsilon(lambda_, dt) + decayed_;
        s.jump_sum = jump_total_ + drift_ * dt;
        s.integrated_variance = ou_epsilon(lambda_, dt) * start_.sigma2 +
                                drift_ * ou_epsilon_integral(lambda_, dt) + weighted_;
        return s;
    }

private:
    // decayed_ = sum z_j e^{-lambda (u - t_j)}, weighted_ = sum z_j eps(u - t_j);
    // eps(a + d) = eps(a) + e^{-lambda a} eps(d) moves both forward.
    void step(double u) {
        const double d = u - u_;
        if (d > 0.0) {
            weighted_ += decayed_ * ou_epsilon(lambda_, d);
            decayed_ *= std::exp(-lambda_ * d);
            u_ = u;
        }
    }

    double lambda_;
    MarketState start_;
    const JumpPath& path_;
    double u_;
    double drift_;
    std::size_t next_ = 0;
    double decayed_ = 0.0;
    double weighted_ = 0.0;
    double jump_total_ = 0.0;
};

/// int_t^T Sigma_u^2 du = eps(T - t) Sigma_t^2 + sum_j eps(T - t_j) z_j, plus the
/// compensation drift's share when the path carries one. Exact; no time grid.
inline double integrated_variance(const BnsParams& params, const MarketState& state, const JumpPath& jumps,
                                  double T) {
    if (T < state.t) throw std::domain_error("integrated_variance: T before state time");
    jumps.validate(state.t, T);
    PathCursor cursor(params.lambda(), state, jumps);
    return cursor.advance_to(T).integrated_variance;
}

/// Average squared future volatility (1/tau) int_t^T E[Sigma_u^2 | Sigma_t^2] du.
inline double avg_future_variance(const MarketState& state, const BnsParams& params) {
    const double tau = params.T() - state.t;
    if (!(tau > 0.0)) throw std::domain_error("avg_future_variance: requires t < T");
    const double w = ou_epsilon(params.lambda(), tau) / tau;
    return w * state.sigma2 + (1.0 - w) * params.measure().moment(1) / params.lambda();
}

}  // namespace bns
