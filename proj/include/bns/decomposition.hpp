#pragma once

// Monte-Carlo estimation of every term in
//
//   V_t = BS_t + tau_t Lbar BS_t + I1 + I2 + I3 + I4 + I5
//
// on one set of jump paths shared with the reference price. In the default
// Conditional mode each path contributes the integrands averaged in closed form
// over the Brownian part given its jumps (see call_kernel.hpp); Pathwise mode
// evaluates them at simulated log-prices instead.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bns/black_scholes.hpp"
#include "bns/bns_model.hpp"
#include "bns/call_kernel.hpp"
#include "bns/path_engine.hpp"
#include "bns/quadrature.hpp"

namespace bns {

enum class EstimatorMode { Conditional, Pathwise };

struct DecompositionConfig {
    unsigned time_nodes = 32;
    // Outer z-integral of I5: number of size-biased samples per time node, or 0
    // for the deterministic outer rule below.
    unsigned i5_outer_samples = 2;
    NuRule::Layout outer_layout{7, 8, 8};
    NuRule::Layout inner_layout{6, 8, 8};
    EstimatorMode mode = EstimatorMode::Conditional;
    bool grid_check = false;  // rerun with doubled time grid on the same paths
    double principal_tol = 1e-9;

    void validate() const {
        if (time_nodes < 2) throw std::invalid_argument("DecompositionConfig: time_nodes must be >= 2");
    }
};

struct Estimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

struct DecompositionReport {
    double K = 0.0;
    double T = 0.0;
    std::size_t n_paths = 0;
    double bs_term = 0.0;
    double jump_principal = 0.0;
    Estimate i1, i2, i3, i4, i5;
    Estimate i2_vol_jump, i2_joint_jump;
    Estimate reference_price;
    Estimate lbar_time_integral;  // E int_t^T e^{-r(u-t)} Lbar BS_u du
    Estimate lbar_identity_gap;         // (I3 + I4 + I5) - (lbar_time_integral - jump_principal)
    double residual = 0.0;
    double residual_se = 0.0;
    double residual_se_quarter = 0.0;  // residual SE over the first n/4 paths
    bool grid_too_coarse = false;

    double decomposition_total() const {
        return bs_term + jump_principal + i1.estimate + i2.estimate + i3.estimate + i4.estimate + i5.estimate;
    }
    bool residual_passes(double k = 3.0) const { return std::abs(residual) <= k * residual_se; }
    bool lbar_identity_passes(double k = 3.0) const { return std::abs(lbar_identity_gap.estimate) <= k * lbar_identity_gap.std_error; }
};

/// Contributions of one path to each statistical term.
struct PathTerms {
    double v = 0.0;
    double i1 = 0.0, i2_vol = 0.0, i2_joint = 0.0, i3 = 0.0, i4 = 0.0, i5 = 0.0;
    double lbar_integral = 0.0;
};

/// Time nodes on [t, T] from Gauss-Legendre in s with u = t + tau (1 - (1 - s)^2),
/// which clusters nodes toward maturity where the greeks sharpen.
struct TimeRule {
    std::vector<double> u, w;
};

inline TimeRule make_time_rule(double t, double T, unsigned n) {
    const auto gl = gauss_legendre(n);
    const double tau = T - t;
    TimeRule r;
    for (std::size_t i = 0; i < gl.size(); ++i) {
        const double s = 0.5 * (gl.nodes[i] + 1.0);
        r.u.push_back(t + tau * (1.0 - (1.0 - s) * (1.0 - s)));
        r.w.push_back(0.5 * gl.weights[i] * 2.0 * tau * (1.0 - s));
    }
    return r;
}

namespace detail {

struct DecompositionContext {
    const BnsParams& params;
    MarketState state;
    double K;
    const SimConfig& sim;
    const DecompositionConfig& cfg;
    TimeRule time;
    NuRule inner;
    NuRule outer;
    JumpKernel kernel;

    DecompositionContext(const BnsParams& p, const MarketState& s, double k, const SimConfig& sc,
                         const DecompositionConfig& dc)
        : params(p), state(s), K(k), sim(sc), cfg(dc), time(make_time_rule(s.t, p.T(), dc.time_nodes)),
          inner(p.measure(), dc.inner_layout), outer(p.measure(), dc.outer_layout), kernel(inner, p.rho()) {}

    // int [Lbar c(y + rho z, W + z tau) - Lbar c(y, W)] nu(dz)
    double i5_inner(double y, double W, double tau, double lbar0, CounterRng& qr) const {
        if (params.rho() == 0.0) return 0.0;
        const double rho = params.rho();
        if (cfg.i5_outer_samples == 0) {
            return outer.integrate([&](double z) { return kernel.lbar(y + rho * z, W + z * tau) - lbar0; });
        }
        const auto& nu = params.measure();
        double s = 0.0;
        for (unsigned m = 0; m < cfg.i5_outer_samples; ++m) {
            const double z = nu.sample_size_biased(qr);
            s += (kernel.lbar(y + rho * z, W + z * tau) - lbar0) / z;
        }
        return nu.moment(1) * s / cfg.i5_outer_samples;
    }

    PathTerms run_path(std::size_t i) const {
        const double T = params.T();
        const double tau = T - state.t;
        const double lam = params.lambda();
        const double rho = params.rho();
        const double drift = params.r() + params.mu();
        // e^{k'_u} e^{-r(u-t)} = K e^{-r tau} at every node.
        const double scale = K * std::exp(-params.r() * tau);

        CounterRng jr(sim.seed, i, StreamPurpose::Jumps);
        const auto jumps = sample_jump_path(params, sim, jr, state.t, T);
        CounterRng qr(sim.seed, i, StreamPurpose::Quadrature);

        std::vector<MarketState> sim_states;
        if (cfg.mode == EstimatorMode::Pathwise) {
            std::vector<double> grid(time.u);
            grid.push_back(T);
            CounterRng br(sim.seed, i, StreamPurpose::Brownian);
            sim_states = state_path_on_grid(params, state, jumps, br, grid);
        }

        PathTerms out;
        PathCursor cursor(lam, state, jumps);
        for (std::size_t n = 0; n < time.u.size(); ++n) {
            const double u = time.u[n];
            const double tu = T - u;
            const auto snap = cursor.advance_to(u);
            const double kp = std::log(K) - params.r() * tu;
            double y, W;
            if (cfg.mode == EstimatorMode::Conditional) {
                y = state.x + drift * (u - state.t) + rho * snap.jump_sum - kp;
                W = snap.sigma2 * tu + snap.integrated_variance;
            } else {
                y = sim_states[n].x - kp;
                W = snap.sigma2 * tu;
            }
            const auto jt = kernel.terms(y, W, tu);
            const double sw = scale * time.w[n];
            const double decay = -lam * snap.sigma2;
            out.i1 += sw * tu * jt.base.cw * decay;
            out.i2_vol += sw * jt.vol_jump;
            out.i2_joint += sw * (jt.total_jump - jt.vol_jump);
            out.i3 += sw * tu * jt.lbar_y * params.mu();
            out.i4 += sw * tu * tu * jt.lbar_w * decay;
            out.i5 += sw * tu * i5_inner(y, W, tu, jt.lbar, qr);
            out.lbar_integral += sw * jt.lbar;
        }

        if (cfg.mode == EstimatorMode::Conditional) {
            out.v = conditional_call(conditional_law(params, state, jumps, T), K, params.r(), tau);
        } else {
            out.v = std::exp(-params.r() * tau) * std::max(std::exp(sim_states.back().x) - K, 0.0);
        }
        return out;
    }
};

inline Estimate estimate_of(const std::vector<PathTerms>& paths, double PathTerms::*field) {
    std::vector<double> xs(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) xs[i] = paths[i].*field;
    const auto e = mean_and_se(xs);
    return {e.price, e.std_error};
}

template <class F>
Estimate estimate_of(const std::vector<PathTerms>& paths, F&& f, std::size_t count) {
    std::vector<double> xs(count);
    for (std::size_t i = 0; i < count; ++i) xs[i] = f(paths[i]);
    const auto e = mean_and_se(xs, count);
    return {e.price, e.std_error};
}

}  // namespace detail

/// Per-path contributions on the shared path set (the CRN backbone of every estimator).
inline std::vector<PathTerms> decomposition_path_terms(const BnsParams& params, const MarketState& state, double K,
                                                       const SimConfig& sim, const DecompositionConfig& cfg) {
    if (!(K > 0.0)) throw std::invalid_argument("decompose: K must be positive");
    if (!(state.t < params.T())) throw std::domain_error("decompose: requires t < T");
    if (sim.n_paths < 2) throw std::invalid_argument("decompose: n_paths < 2 leaves standard errors undefined");
    cfg.validate();
    sim.validate(params.measure());
    detail::DecompositionContext ctx(params, state, K, sim, cfg);
    std::vector<PathTerms> out(sim.n_paths);
    parallel_for(sim.n_paths, sim.threads, [&](std::size_t i) {
        out[i] = ctx.run_path(i);
        const auto& p = out[i];
        const double all[] = {p.v, p.i1, p.i2_vol, p.i2_joint, p.i3, p.i4, p.i5, p.lbar_integral};
        for (double a : all) {
            if (!std::isfinite(a)) {
                throw std::runtime_error("decompose: non-finite contribution on path " + std::to_string(i));
            }
        }
    });
    return out;
}

inline Estimate estimate_i1(const BnsParams& params, const MarketState& state, double K, const SimConfig& sim,
                            const DecompositionConfig& cfg = {}) {
    return detail::estimate_of(decomposition_path_terms(params, state, K, sim, cfg), &PathTerms::i1);
}

struct I2Estimate {
    Estimate total, vol_jump, joint_jump;
};

inline I2Estimate estimate_i2(const BnsParams& params, const MarketState& state, double K, const SimConfig& sim,
                              const DecompositionConfig& cfg = {}) {
    const auto paths = decomposition_path_terms(params, state, K, sim, cfg);
    I2Estimate r;
    r.vol_jump = detail::estimate_of(paths, &PathTerms::i2_vol);
    r.joint_jump = detail::estimate_of(paths, &PathTerms::i2_joint);
    r.total = detail::estimate_of(paths, [](const PathTerms& p) { return p.i2_vol + p.i2_joint; }, paths.size());
    r.total.estimate = r.vol_jump.estimate + r.joint_jump.estimate;
    return r;
}

struct I345Estimate {
    Estimate i3, i4, i5;
};

inline I345Estimate estimate_i3_i4_i5(const BnsParams& params, const MarketState& state, double K,
                                      const SimConfig& sim, const DecompositionConfig& cfg = {}) {
    const auto paths = decomposition_path_terms(params, state, K, sim, cfg);
    return {detail::estimate_of(paths, &PathTerms::i3), detail::estimate_of(paths, &PathTerms::i4),
            detail::estimate_of(paths, &PathTerms::i5)};
}

/// tau_t Lbar BS_t at the starting state (deterministic).
inline double jump_principal(const BnsParams& params, const MarketState& state, double K, double tol = 1e-9) {
    const BsPoint p{state.t, state.x, state.sigma2, K, params.r(), params.T()};
    if (params.rho() == 0.0 || !(p.tau() > 0.0)) return 0.0;
    return p.tau() * lbar_bs(p, params.rho(), params.measure(), tol).value;
}

inline DecompositionReport decompose(const BnsParams& params, const MarketState& state, double K,
                                     const SimConfig& sim, const DecompositionConfig& cfg = {}) {
    DecompositionReport rep;
    rep.K = K;
    rep.T = params.T();
    rep.n_paths = sim.n_paths;
    const BsPoint p0{state.t, state.x, state.sigma2, K, params.r(), params.T()};
    p0.validate();
    rep.bs_term = bs_price(p0);
    if (!(p0.tau() > 0.0)) {
        // V_T = BS_T = payoff; every integral is empty.
        rep.reference_price = {rep.bs_term, 0.0};
        return rep;
    }
    rep.jump_principal = jump_principal(params, state, K, cfg.principal_tol);

    const auto paths = decomposition_path_terms(params, state, K, sim, cfg);
    const std::size_t n = paths.size();
    using detail::estimate_of;
    rep.reference_price = estimate_of(paths, &PathTerms::v);
    rep.i1 = estimate_of(paths, &PathTerms::i1);
    rep.i2_vol_jump = estimate_of(paths, &PathTerms::i2_vol);
    rep.i2_joint_jump = estimate_of(paths, &PathTerms::i2_joint);
    rep.i2 = estimate_of(paths, [](const PathTerms& q) { return q.i2_vol + q.i2_joint; }, n);
    rep.i2.estimate = rep.i2_vol_jump.estimate + rep.i2_joint_jump.estimate;
    rep.i3 = estimate_of(paths, &PathTerms::i3);
    rep.i4 = estimate_of(paths, &PathTerms::i4);
    rep.i5 = estimate_of(paths, &PathTerms::i5);
    rep.lbar_time_integral = estimate_of(paths, &PathTerms::lbar_integral);

    const double fixed = rep.bs_term + rep.jump_principal;
    auto residual_of = [fixed](const PathTerms& q) {
        return q.v - fixed - (q.i1 + q.i2_vol + q.i2_joint + q.i3 + q.i4 + q.i5);
    };
    rep.residual = rep.reference_price.estimate - rep.decomposition_total();
    rep.residual_se = estimate_of(paths, residual_of, n).std_error;
    rep.residual_se_quarter = n / 4 >= 2 ? estimate_of(paths, residual_of, n / 4).std_error : 0.0;

    const double principal = rep.jump_principal;
    rep.lbar_identity_gap = estimate_of(paths, [principal](const PathTerms& q) {
        return q.i3 + q.i4 + q.i5 - (q.lbar_integral - principal);
    }, n);
    rep.lbar_identity_gap.estimate =
        rep.i3.estimate + rep.i4.estimate + rep.i5.estimate - (rep.lbar_time_integral.estimate - principal);

    if (cfg.grid_check) {
        DecompositionConfig fine = cfg;
        fine.grid_check = false;
        fine.time_nodes = 2 * cfg.time_nodes;
        const auto r2 = decompose(params, state, K, sim, fine);
        const std::pair<const Estimate*, const Estimate*> pairs[] = {
            {&rep.i1, &r2.i1}, {&rep.i2, &r2.i2}, {&rep.i3, &r2.i3}, {&rep.i4, &r2.i4}, {&rep.i5, &r2.i5}};
        for (const auto& [a, b] : pairs) {
            if (std::abs(a->estimate - b->estimate) > a->std_error) rep.grid_too_coarse = true;
        }
    }
    return rep;
}

// Serialization.

inline std::string decomposition_csv_header() {
    return "K,T,n_paths,reference_price,reference_price_se,bs_term,jump_principal,"
           "i1,i1_se,i2,i2_se,i2_vol_jump,i2_vol_jump_se,i2_joint_jump,i2_joint_jump_se,"
           "i3,i3_se,i4,i4_se,i5,i5_se,lbar_time_integral,lbar_time_integral_se,"
           "lbar_identity_gap,lbar_identity_gap_se,residual,residual_se,residual_se_quarter,grid_too_coarse";
}

inline std::string decomposition_csv_row(const DecompositionReport& r) {
    std::ostringstream os;
    os << std::setprecision(17);
    auto est = [&os](const Estimate& e) { os << ',' << e.estimate << ',' << e.std_error; };
    os << r.K << ',' << r.T << ',' << r.n_paths;
    est(r.reference_price);
    os << ',' << r.bs_term << ',' << r.jump_principal;
    est(r.i1);
    est(r.i2);
    est(r.i2_vol_jump);
    est(r.i2_joint_jump);
    est(r.i3);
    est(r.i4);
    est(r.i5);
    est(r.lbar_time_integral);
    est(r.lbar_identity_gap);
    os << ',' << r.residual << ',' << r.residual_se << ',' << r.residual_se_quarter << ','
       << (r.grid_too_coarse ? 1 : 0);
    return os.str();
}

inline void write_decomposition_text(std::ostream& os, const DecompositionReport& r) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(6) << std::fixed;
    auto line = [&os](const char* name, const Estimate& e) {
        os << "  " << std::left << std::setw(22) << name << std::right << std::setw(14) << e.estimate
           << "  +/- " << e.std_error << '\n';
    };
    os << "K = " << r.K << ", T = " << r.T << ", paths = " << r.n_paths << '\n';
    line("reference price V", r.reference_price);
    os << "  " << std::left << std::setw(22) << "BS(sigma_t^2)" << std::right << std::setw(14) << r.bs_term << '\n';
    os << "  " << std::left << std::setw(22) << "tau Lbar BS" << std::right << std::setw(14) << r.jump_principal
       << '\n';
    line("I1", r.i1);
    line("I2", r.i2);
    line("  vol jump part", r.i2_vol_jump);
    line("  joint jump part", r.i2_joint_jump);
    line("I3", r.i3);
    line("I4", r.i4);
    line("I5", r.i5);
    line("int Lbar BS du", r.lbar_time_integral);
    line("I3+I4+I5 gap", r.lbar_identity_gap);
    os << "  " << std::left << std::setw(22) << "residual" << std::right << std::setw(14) << r.residual << "  +/- "
       << r.residual_se << (r.residual_passes() ? "  (within 3 SE)" : "  (OUTSIDE 3 SE)") << '\n';
    if (r.grid_too_coarse) os << "  warning: doubling the time grid moved a term by more than its SE\n";
    os.flags(flags);
    os.precision(prec);
}

}  // namespace bns
