#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bns/black_scholes.hpp"
#include "bns/path_engine.hpp"

using namespace bns;

namespace {

const LevyMeasureSpec kIg = LevyMeasureSpec::ig_ou(2.4958, 0.0872, 11.98);
const LevyMeasureSpec kGamma = LevyMeasureSpec::gamma_ou(2.4958, 0.0872, 11.98);
constexpr double kRho = -4.7039;

BnsParams with(const LevyMeasureSpec& nu, double T = 0.25, double rho = kRho) {
    return {468.44, 0.064262 * 0.064262, rho, 0.01, T, nu};
}

SimConfig sim(std::size_t n, std::uint64_t seed = 99) {
    SimConfig c;
    c.n_paths = n;
    c.seed = seed;
    return c;
}

PriceEstimate mean_of(const std::vector<double>& xs) { return mean_and_se(xs); }

}  // namespace

TEST(SampleJumpPath, SatisfiesInvariants) {
    for (const auto& nu : {kIg, kGamma}) {
        const auto p = with(nu, 2.0);
        const auto cfg = sim(1);
        for (std::uint64_t i = 0; i < 200; ++i) {
            CounterRng rng(1, i, StreamPurpose::Jumps);
            const auto j = sample_jump_path(p, cfg, rng);
            EXPECT_NO_THROW(j.validate(0.0, 2.0));
            if (nu.infinite_activity()) {
                EXPECT_EQ(j.truncation_level, 1e-6);
                EXPECT_NEAR(j.compensated_small_jump_mass, nu.truncated_first_moment(1e-6), 1e-20);
                EXPECT_TRUE(j.drift_compensated);
            } else {
                EXPECT_EQ(j.truncation_level, 0.0);
                EXPECT_EQ(j.drift_rate(), 0.0);
            }
        }
    }
}

TEST(SampleJumpPath, GammaJumpCountMatchesPoissonMean) {
    const double T = 2.0;
    const auto p = with(kGamma, T);
    const auto cfg = sim(100000);
    std::vector<double> counts(cfg.n_paths);
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        CounterRng rng(cfg.seed, i, StreamPurpose::Jumps);
        counts[i] = static_cast<double>(sample_jump_path(p, cfg, rng).size());
    }
    const auto m = mean_of(counts);
    EXPECT_NEAR(m.price, kGamma.lambda() * kGamma.a() * T, 3.0 * m.std_error);
}

TEST(SampleJumpPath, ExpectedJumpSumBothMeasures) {
    for (const auto& nu : {kIg, kGamma}) {
        const double T = 1.0;
        const auto p = with(nu, T);
        const auto s = simulate_summaries(p, p.initial_state(), sim(100000, 5));
        std::vector<double> h(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) h[i] = s[i].jump_sum;
        const auto m = mean_of(h);
        EXPECT_NEAR(m.price, T * nu.moment(1), 3.0 * m.std_error) << to_string(nu.kind());
        // Second moment of the increment: Var H = T int z^2 nu.
        double ss = 0.0;
        for (double x : h) ss += (x - m.price) * (x - m.price);
        const double var = ss / (h.size() - 1);
        double s4 = 0.0;
        for (double x : h) s4 += std::pow(x - m.price, 4);
        const double var_se = std::sqrt((s4 / h.size() - var * var) / h.size());
        EXPECT_NEAR(var, T * nu.moment(2), 3.0 * var_se) << to_string(nu.kind());
    }
}

TEST(SampleJumpPath, DiscardPolicyBiasEqualsTruncatedMass) {
    const double T = 0.25, eps = 1e-2;
    const auto p = with(kIg, T);
    auto cfg = sim(20000, 17);
    cfg.ig_truncation = eps;
    cfg.small_jump_policy = SmallJumpPolicy::Discard;
    const auto s = simulate_summaries(p, p.initial_state(), cfg);
    std::vector<double> h(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) h[i] = s[i].jump_sum;
    const auto m = mean_of(h);
    const double expect = T * (kIg.moment(1) - kIg.truncated_first_moment(eps));
    EXPECT_NEAR(m.price, expect, 3.0 * m.std_error);
    EXPECT_GT(T * kIg.truncated_first_moment(eps), 10.0 * m.std_error);  // the bias is visible
}

TEST(TerminalState, NoJumpsZeroDraw) {
    const auto p = with(kIg);
    const MarketState s{0.0, 6.1, 0.004};
    const auto out = terminal_state(p, s, JumpPath{}, 0.0);
    const double eps = ou_epsilon(p.lambda(), 0.25);
    EXPECT_NEAR(out.x, 6.1 + (0.01 + p.mu()) * 0.25 - 0.5 * eps * 0.004, 1e-14);
    EXPECT_NEAR(out.sigma2, std::exp(-p.lambda() * 0.25) * 0.004, 1e-18);
    EXPECT_EQ(out.t, 0.25);
}

TEST(TerminalState, ZeroLeverageNoJumpsIsLognormalMartingale) {
    const auto p = with(kIg, 0.25, 0.0);
    const MarketState s{0.0, std::log(100.0), 0.04};
    const auto law = conditional_law(p, s, JumpPath{}, 0.25);
    EXPECT_NEAR(std::exp(law.mean + 0.5 * law.variance - 0.01 * 0.25), 100.0, 1e-12);
}

TEST(McPrice, DegenerateMeasureMatchesLognormalPrice) {
    // a -> 0: no jumps in practice, mu ~ 0, total variance eps(tau) sigma^2.
    const auto nu = LevyMeasureSpec::gamma_ou(2.0, 1e-14, 10.0);
    const BnsParams p{100.0, 0.04, -1.0, 0.02, 0.5, nu};
    const auto e = mc_price(p, p.initial_state(), 95.0, sim(10));
    const double W = ou_epsilon(2.0, 0.5) * 0.04;
    const BsPoint q{0.0, std::log(100.0), W / 0.5, 95.0, 0.02, 0.5};
    EXPECT_NEAR(e.price, bs_price(q), 1e-10);
    EXPECT_NEAR(e.std_error, 0.0, 1e-12);
}

TEST(McPrice, ConditionalAgreesWithPlain) {
    const auto p = with(kIg);
    const auto cfg = sim(100000, 3);
    const auto c = mc_price(p, p.initial_state(), 460.0, cfg, PriceEstimator::Conditional);
    const auto pl = mc_price(p, p.initial_state(), 460.0, cfg, PriceEstimator::Plain);
    EXPECT_NEAR(c.price, pl.price, 3.0 * std::hypot(c.std_error, pl.std_error));
    EXPECT_LT(c.std_error, pl.std_error);
}

TEST(McPrice, ReferenceParametersQualitativeBounds) {
    const auto p = with(kIg);
    const auto e = mc_price(p, p.initial_state(), 460.0, sim(20000));
    EXPECT_GT(e.price, 0.0);
    EXPECT_LT(e.price, 468.44);
    EXPECT_GT(e.price, 468.44 - 460.0 * std::exp(-0.01 * 0.25));  // above intrinsic
}

TEST(McPrice, ErrorsOnBadInput) {
    const auto p = with(kIg);
    EXPECT_THROW(mc_price(p, p.initial_state(), 460.0, sim(1)), std::invalid_argument);
    EXPECT_THROW(mc_price(p, p.initial_state(), -1.0, sim(10)), std::invalid_argument);
    EXPECT_THROW(mc_price(p, MarketState{0.25, 6.0, 0.004}, 460.0, sim(10)), std::domain_error);
}

TEST(McPrice, TruncationHalvingMovesPriceLessThanOneSe) {
    // Coupled by thinning: jumps above eps of a path truncated at eps/2 form a
    // path truncated at eps.
    const auto p = with(kIg);
    const double eps = 1e-6;
    auto half = sim(20000, 8);
    half.ig_truncation = 0.5 * eps;
    const double tau = p.T();
    std::vector<double> coarse(half.n_paths), fine(half.n_paths);
    for (std::size_t i = 0; i < half.n_paths; ++i) {
        CounterRng rng(half.seed, i, StreamPurpose::Jumps);
        const auto jf = sample_jump_path(p, half, rng);
        JumpPath jc;
        jc.truncation_level = eps;
        jc.compensated_small_jump_mass = kIg.truncated_first_moment(eps);
        jc.drift_compensated = true;
        for (std::size_t k = 0; k < jf.size(); ++k) {
            if (jf.sizes[k] > eps) {
                jc.times.push_back(jf.times[k]);
                jc.sizes.push_back(jf.sizes[k]);
            }
        }
        fine[i] = conditional_call(conditional_law(p, p.initial_state(), jf, tau), 460.0, p.r(), tau);
        coarse[i] = conditional_call(conditional_law(p, p.initial_state(), jc, tau), 460.0, p.r(), tau);
    }
    const auto ef = mean_of(fine), ec = mean_of(coarse);
    EXPECT_LT(std::abs(ef.price - ec.price), ec.std_error);
}

TEST(McPrice, MartingaleBothMeasures) {
    for (const auto& nu : {kIg, kGamma}) {
        const auto p = with(nu);
        const auto s = simulate_summaries(p, p.initial_state(), sim(100000, 21));
        std::vector<double> d(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) d[i] = s[i].discounted_terminal;
        const auto m = mean_of(d);
        EXPECT_NEAR(m.price, 468.44, 3.0 * m.std_error) << to_string(nu.kind());
    }
}

TEST(Simulation, PathBoundAndVarianceFloor) {
    const auto p = with(kIg, 0.4);
    auto cfg = sim(20000, 4);
    for (int i = 1; i <= 40; ++i) cfg.grid.push_back(0.01 * i);
    const auto s = simulate_summaries(p, p.initial_state(), cfg);
    for (const auto& x : s) {
        ASSERT_GE((x.jump_sum + p.sigma0_sq()) / p.lambda() - x.integrated_variance, 0.0);
        ASSERT_GE(x.min_grid_sigma2, p.variance_floor() * (1.0 - 1e-15));
    }
}

TEST(Simulation, DeterministicAcrossThreadCounts) {
    const auto p = with(kIg);
    auto a = sim(3000, 12), b = sim(3000, 12);
    a.threads = 1;
    b.threads = 4;
    EXPECT_EQ(price_samples(p, p.initial_state(), 460.0, a), price_samples(p, p.initial_state(), 460.0, b));
}

TEST(StatePathOnGrid, SingleCellReproducesTerminalState) {
    const auto p = with(kIg);
    const auto s0 = p.initial_state();
    CounterRng jr(5, 0, StreamPurpose::Jumps);
    const auto jumps = sample_jump_path(p, sim(1), jr);
    CounterRng br(5, 0, StreamPurpose::Brownian);
    const auto states = state_path_on_grid(p, s0, jumps, br, {0.0, 0.25});
    CounterRng br2(5, 0, StreamPurpose::Brownian);
    const double g = std::normal_distribution<double>(0.0, 1.0)(br2);
    const auto term = terminal_state(p, s0, jumps, g);
    ASSERT_EQ(states.size(), 2u);
    EXPECT_NEAR(states.back().x, term.x, 1e-13);
    EXPECT_DOUBLE_EQ(states.back().sigma2, term.sigma2);
    EXPECT_EQ(states.front().x, s0.x);
}

TEST(StatePathOnGrid, RefiningGridLeavesTerminalLawUnchanged) {
    // Two-sample Kolmogorov-Smirnov on X_T from a one-cell and a 50-cell grid.
    const auto p = with(kIg);
    const auto s0 = p.initial_state();
    const std::size_t n = 10000;
    std::vector<double> coarse_grid{0.0, 0.25}, fine_grid;
    for (int i = 0; i <= 50; ++i) fine_grid.push_back(0.25 * i / 50.0);
    std::vector<double> a(n), b(n);
    const auto cfg = sim(1);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng j1(101, i, StreamPurpose::Jumps), b1(101, i, StreamPurpose::Brownian);
        a[i] = state_path_on_grid(p, s0, sample_jump_path(p, cfg, j1), b1, coarse_grid).back().x;
        CounterRng j2(202, i, StreamPurpose::Jumps), b2(202, i, StreamPurpose::Brownian);
        b[i] = state_path_on_grid(p, s0, sample_jump_path(p, cfg, j2), b2, fine_grid).back().x;
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < n && j < n) {
        if (a[i] <= b[j]) ++i; else ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / n));
    }
    const double critical = 1.628 * std::sqrt(2.0 / n);  // 1% level
    EXPECT_LT(d, critical);
}

TEST(StatePathOnGrid, RejectsBadGrid) {
    const auto p = with(kIg);
    CounterRng r(1, 0, StreamPurpose::Brownian);
    EXPECT_THROW(state_path_on_grid(p, p.initial_state(), JumpPath{}, r, {0.2, 0.1}), std::invalid_argument);
    EXPECT_THROW(state_path_on_grid(p, p.initial_state(), JumpPath{}, r, {0.1, 0.3}), std::domain_error);
}

TEST(PathDump, ColumnsAndJumpRows) {
    const auto p = with(kIg);
    auto cfg = sim(3, 9);
    std::ostringstream os;
    write_path_dump(os, p, p.initial_state(), cfg, {0.0, 0.125, 0.25});
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "path_id,time,x,sigma2,jump_size");
    std::size_t rows = 0, jump_rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
        if (line.substr(line.rfind(',') + 1) != "0") ++jump_rows;
    }
    EXPECT_EQ(rows, 9 + jump_rows);
    EXPECT_EQ(os.str().find('\r'), std::string::npos);
}
