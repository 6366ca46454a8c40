#pragma once

// Exact simulation of the subordinator jumps, the variance path and the
// log-price, plus the conditional Monte-Carlo reference price.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bns/bns_model.hpp"
#include "bns/call_kernel.hpp"
#include "bns/jump_path.hpp"
#include "bns/parallel.hpp"
#include "bns/random.hpp"

namespace bns {

enum class SmallJumpPolicy { Discard, AddDeterministicDrift };

inline const char* to_string(SmallJumpPolicy p) {
    return p == SmallJumpPolicy::Discard ? "discard" : "drift";
}

struct SimConfig {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20240901;
    double ig_truncation = 1e-6;
    SmallJumpPolicy small_jump_policy = SmallJumpPolicy::AddDeterministicDrift;
    std::vector<double> grid;  // optional diagnostic times
    unsigned threads = 0;      // 0: hardware concurrency

    void validate(const LevyMeasureSpec& nu) const {
        if (n_paths < 1) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
        if (nu.infinite_activity() && !(ig_truncation > 0.0)) {
            throw std::invalid_argument("SimConfig: ig_truncation must be positive for IG-OU");
        }
    }
};

/// Raised when jump-size inversion fails.
class SamplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Jumps of H_{lambda u} on (t0, T].
inline JumpPath sample_jump_path(const BnsParams& params, const SimConfig& cfg, CounterRng& rng, double t0,
                                 double T) {
    if (!(T >= t0)) throw std::domain_error("sample_jump_path: T before t0");
    const auto& nu = params.measure();
    JumpPath path;
    double rate;
    double tail_at_trunc = 0.0;
    if (nu.infinite_activity()) {
        path.truncation_level = cfg.ig_truncation;
        path.compensated_small_jump_mass = nu.truncated_first_moment(cfg.ig_truncation);
        path.drift_compensated = cfg.small_jump_policy == SmallJumpPolicy::AddDeterministicDrift;
        tail_at_trunc = nu.tail_mass(cfg.ig_truncation);
        rate = tail_at_trunc;
    } else {
        rate = nu.total_mass();
    }
    if (!(rate > 0.0)) return path;
    double u = t0;
    for (;;) {
        u += -std::log(rng.uniform()) / rate;
        if (u > T) break;
        double z;
        if (nu.infinite_activity()) {
            try {
                z = nu.inverse_tail_mass(rng.uniform() * tail_at_trunc);
            } catch (const std::exception& e) {
                throw SamplerError(std::string("sample_jump_path: ") + e.what());
            }
            // Guard against rounding at the truncation boundary.
            if (!(z > path.truncation_level)) z = std::nextafter(path.truncation_level, 1.0);
        } else {
            z = -std::log(rng.uniform()) / nu.b();
        }
        if (!path.times.empty() && !(u > path.times.back())) continue;  // measure-zero tie
        path.times.push_back(u);
        path.sizes.push_back(z);
    }
    return path;
}

inline JumpPath sample_jump_path(const BnsParams& params, const SimConfig& cfg, CounterRng& rng) {
    return sample_jump_path(params, cfg, rng, 0.0, params.T());
}

/// Law of X_T given the jump path: Gaussian with these moments.
struct ConditionalLaw {
    double mean = 0.0;
    double variance = 0.0;  // integrated variance over (t, T]
    double sigma2_T = 0.0;
    double jump_sum = 0.0;  // H_{lambda T} - H_{lambda t}, including compensation drift
};

inline ConditionalLaw conditional_law(const BnsParams& params, const MarketState& state, const JumpPath& jumps,
                                      double T) {
    PathCursor cursor(params.lambda(), state, jumps);
    const auto s = cursor.advance_to(T);
    ConditionalLaw law;
    law.variance = s.integrated_variance;
    law.sigma2_T = s.sigma2;
    law.jump_sum = s.jump_sum;
    law.mean = state.x + (params.r() + params.mu()) * (T - state.t) - 0.5 * s.integrated_variance +
               params.rho() * s.jump_sum;
    return law;
}

/// State at maturity given the jump path and one standard normal draw.
inline MarketState terminal_state(const BnsParams& params, const MarketState& state, const JumpPath& jumps,
                                  double gaussian) {
    jumps.validate(state.t, params.T());
    const auto law = conditional_law(params, state, jumps, params.T());
    return {params.T(), law.mean + std::sqrt(law.variance) * gaussian, law.sigma2_T};
}

/// Discounted E[(e^{X_T} - K)^+ | jumps] for X_T ~ N(mean, variance).
inline double conditional_call(const ConditionalLaw& law, double K, double r, double tau) {
    const double lk = std::log(K);
    const double disc = std::exp(-r * tau) * K;
    if (!(law.variance > 0.0)) return disc * std::max(std::exp(law.mean - lk) - 1.0, 0.0);
    return disc * CallKernel::value(law.mean + 0.5 * law.variance - lk, law.variance);
}

struct PriceEstimate {
    double price = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error of the mean.
inline PriceEstimate mean_and_se(const std::vector<double>& xs, std::size_t count) {
    if (count < 2 || count > xs.size()) throw std::invalid_argument("mean_and_se: need at least two samples");
    double mean = 0.0;
    for (std::size_t i = 0; i < count; ++i) mean += xs[i];
    mean /= static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t i = 0; i < count; ++i) ss += (xs[i] - mean) * (xs[i] - mean);
    const double var = ss / static_cast<double>(count - 1);
    return {mean, std::sqrt(var / static_cast<double>(count))};
}

inline PriceEstimate mean_and_se(const std::vector<double>& xs) { return mean_and_se(xs, xs.size()); }

enum class PriceEstimator { Conditional, Plain };

/// Per-path discounted payoff samples; path i uses streams (seed, i, Jumps) and
/// (seed, i, Brownian), the same jump streams the decomposition reads.
inline std::vector<double> price_samples(const BnsParams& params, const MarketState& state, double K,
                                         const SimConfig& cfg, PriceEstimator mode = PriceEstimator::Conditional) {
    if (!(K > 0.0)) throw std::invalid_argument("mc_price: K must be positive");
    const double T = params.T();
    const double tau = T - state.t;
    if (!(tau > 0.0)) throw std::domain_error("mc_price: requires t < T");
    cfg.validate(params.measure());
    std::vector<double> out(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        CounterRng jr(cfg.seed, i, StreamPurpose::Jumps);
        const auto jumps = sample_jump_path(params, cfg, jr, state.t, T);
        const auto law = conditional_law(params, state, jumps, T);
        if (mode == PriceEstimator::Conditional) {
            out[i] = conditional_call(law, K, params.r(), tau);
        } else {
            CounterRng br(cfg.seed, i, StreamPurpose::Brownian);
            const double g = std::normal_distribution<double>(0.0, 1.0)(br);
            const double xT = law.mean + std::sqrt(law.variance) * g;
            out[i] = std::exp(-params.r() * tau) * std::max(std::exp(xT) - K, 0.0);
        }
    });
    return out;
}

inline PriceEstimate mc_price(const BnsParams& params, const MarketState& state, double K, const SimConfig& cfg,
                              PriceEstimator mode = PriceEstimator::Conditional) {
    if (cfg.n_paths < 2) throw std::invalid_argument("mc_price: n_paths < 2 leaves the standard error undefined");
    return mean_and_se(price_samples(params, state, K, cfg, mode));
}

/// Conditional law of X_T for every path; lets one path set price many strikes.
inline std::vector<ConditionalLaw> sample_conditional_laws(const BnsParams& params, const MarketState& state,
                                                           const SimConfig& cfg) {
    if (!(state.t < params.T())) throw std::domain_error("sample_conditional_laws: requires t < T");
    cfg.validate(params.measure());
    std::vector<ConditionalLaw> out(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        CounterRng jr(cfg.seed, i, StreamPurpose::Jumps);
        out[i] = conditional_law(params, state, sample_jump_path(params, cfg, jr, state.t, params.T()), params.T());
    });
    return out;
}

/// Per-path quantities used by the simulation-law checks.
struct PathSummary {
    double jump_sum = 0.0;             // H_{lambda T} - H_{lambda t}
    double integrated_variance = 0.0;  // int_t^T Sigma^2 du
    double discounted_terminal = 0.0;  // e^{-r tau} S_T, one Gaussian draw
    double min_grid_sigma2 = 0.0;      // min of Sigma^2 over cfg.grid (and T)
    std::size_t jump_count = 0;
};

inline std::vector<PathSummary> simulate_summaries(const BnsParams& params, const MarketState& state,
                                                   const SimConfig& cfg) {
    cfg.validate(params.measure());
    const double T = params.T();
    std::vector<double> grid;
    for (double g : cfg.grid)
        if (g > state.t && g <= T) grid.push_back(g);
    std::sort(grid.begin(), grid.end());
    std::vector<PathSummary> out(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        CounterRng jr(cfg.seed, i, StreamPurpose::Jumps);
        const auto jumps = sample_jump_path(params, cfg, jr, state.t, T);
        PathCursor cursor(params.lambda(), state, jumps);
        double mn = state.sigma2;
        for (double g : grid) mn = std::min(mn, cursor.advance_to(g).sigma2);
        const auto law = conditional_law(params, state, jumps, T);
        mn = std::min(mn, law.sigma2_T);
        CounterRng br(cfg.seed, i, StreamPurpose::Brownian);
        const double g = std::normal_distribution<double>(0.0, 1.0)(br);
        PathSummary s;
        s.jump_sum = law.jump_sum;
        s.integrated_variance = law.variance;
        s.discounted_terminal = std::exp(law.mean + std::sqrt(law.variance) * g - params.r() * (T - state.t));
        s.min_grid_sigma2 = mn;
        s.jump_count = jumps.size();
        out[i] = s;
    });
    return out;
}

/// (X, Sigma^2) at each grid time. Sigma^2 is exact; X moves cell by cell with
/// the cell's exact integrated variance and one Gaussian per cell.
inline std::vector<MarketState> state_path_on_grid(const BnsParams& params, const MarketState& state,
                                                   const JumpPath& jumps, CounterRng& rng,
                                                   const std::vector<double>& grid) {
    if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("state_path_on_grid: grid not sorted");
    if (!grid.empty() && (grid.front() < state.t || grid.back() > params.T())) {
        throw std::domain_error("state_path_on_grid: grid outside [t, T]");
    }
    PathCursor cursor(params.lambda(), state, jumps);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<MarketState> out;
    out.reserve(grid.size());
    double x = state.x, u_prev = state.t, iv_prev = 0.0, h_prev = 0.0;
    for (double u : grid) {
        const auto s = cursor.advance_to(u);
        const double div = s.integrated_variance - iv_prev;
        const double dh = s.jump_sum - h_prev;
        if (u > u_prev) {
            x += (params.r() + params.mu()) * (u - u_prev) - 0.5 * div + params.rho() * dh +
                 std::sqrt(std::max(div, 0.0)) * normal(rng);
        }
        out.push_back({u, x, s.sigma2});
        u_prev = u;
        iv_prev = s.integrated_variance;
        h_prev = s.jump_sum;
    }
    return out;
}

/// Diagnostic dump: one row per grid time and per jump, columns
/// path_id,time,x,sigma2,jump_size (jump_size 0 on plain grid rows).
inline void write_path_dump(std::ostream& os, const BnsParams& params, const MarketState& state,
                            const SimConfig& cfg, const std::vector<double>& grid) {
    os.precision(17);
    os << "path_id,time,x,sigma2,jump_size\n";
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        CounterRng jr(cfg.seed, i, StreamPurpose::Jumps);
        const auto jumps = sample_jump_path(params, cfg, jr, state.t, params.T());
        std::vector<double> times(grid.begin(), grid.end());
        times.insert(times.end(), jumps.times.begin(), jumps.times.end());
        times.push_back(state.t);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        CounterRng br(cfg.seed, i, StreamPurpose::Brownian);
        const auto states = state_path_on_grid(params, state, jumps, br, times);
        std::size_t j = 0;
        for (const auto& s : states) {
            while (j < jumps.size() && jumps.times[j] < s.t) ++j;
            const double z = (j < jumps.size() && jumps.times[j] == s.t) ? jumps.sizes[j] : 0.0;
            os << i << ',' << s.t << ',' << s.x << ',' << s.sigma2 << ',' << z << '\n';
        }
    }
}

}  // namespace bns
