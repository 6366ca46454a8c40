#include <gtest/gtest.h>

#include <cmath>
#include <iomanip>
#include <sstream>

#include "bns/experiments.hpp"

using namespace bns;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_run_config(in);
}

std::vector<std::vector<double>> read_csv(const std::string& text, std::string* header = nullptr) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST(ValueList, CommaSeparated) {
    const auto v = parse_value_list(" 440, 460 ,480");
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[1], 460.0);
}

TEST(ValueList, InclusiveRangeEndsExactly) {
    const auto v = parse_value_list("440:480:0.1");
    ASSERT_EQ(v.size(), 401u);
    EXPECT_EQ(v.front(), 440.0);
    EXPECT_NEAR(v.back(), 480.0, 1e-9);
    const auto m = parse_value_list("0.02:0.40:0.02");
    EXPECT_EQ(m.size(), 20u);
}

TEST(ValueList, RejectsMalformedInput) {
    EXPECT_THROW(parse_value_list(""), ConfigError);
    EXPECT_THROW(parse_value_list("1,abc"), ConfigError);
    EXPECT_THROW(parse_value_list("1:2"), ConfigError);
    EXPECT_THROW(parse_value_list("1:2:0"), ConfigError);
    EXPECT_THROW(parse_value_list("3:2:1"), ConfigError);
    EXPECT_THROW(parse_value_list("1.5x"), ConfigError);
}

TEST(RunConfigParse, DefaultsAreReferenceParameters) {
    const auto c = parse("");
    EXPECT_EQ(c.S0, 468.44);
    EXPECT_EQ(c.rho, -4.7039);
    EXPECT_EQ(c.kind, MeasureKind::InverseGaussianOU);
    EXPECT_EQ(c.sim.n_paths, 100000u);
    EXPECT_EQ(c.strikes.size(), 3u);
    EXPECT_NEAR(c.params().mu(), 0.082783, 1e-6);
}

TEST(RunConfigParse, ReadsAllSections) {
    const auto c = parse(
        "[model]\nS0 = 100\nsigma0_sq = 0.04\nrho = -1\nr = 0.02\nT = 0.5\n"
        "[measure]\nkind = gamma\nlambda = 1.5\na = 2\nb = 10\n"
        "[sim]\nn_paths = 5000\nseed = 9\nsmall_jump_policy = discard\nthreads = 2\n"
        "[experiment]\ntype = price\nstrikes = 90:110:10\nmaturities = 0.5\nmode = pathwise\ntime_nodes = 16\n");
    EXPECT_EQ(c.S0, 100.0);
    EXPECT_NEAR(c.sigma0, 0.2, 1e-15);
    EXPECT_EQ(c.kind, MeasureKind::GammaOU);
    EXPECT_EQ(c.sim.n_paths, 5000u);
    EXPECT_EQ(c.sim.seed, 9u);
    EXPECT_EQ(c.sim.small_jump_policy, SmallJumpPolicy::Discard);
    EXPECT_EQ(c.sim.threads, 2u);
    EXPECT_EQ(c.experiment, Experiment::Price);
    EXPECT_EQ(c.strikes, (std::vector<double>{90.0, 100.0, 110.0}));
    EXPECT_EQ(c.decomposition.mode, EstimatorMode::Pathwise);
    EXPECT_EQ(c.decomposition.time_nodes, 16u);
}

TEST(RunConfigParse, RejectsBadInput) {
    EXPECT_THROW(parse("[model]\nrho = 0.3\n"), ConfigError);
    EXPECT_THROW(parse("[extras]\nfoo = 1\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nS0 = abc\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nS0 = 12abc\n"), ConfigError);
    EXPECT_THROW(parse("[measure]\nkind = stable\n"), ConfigError);
    EXPECT_THROW(parse("[sim]\nn_paths = 0\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\ntype = plot\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\nstrikes = -1,2\n"), ConfigError);
    EXPECT_THROW(load_run_config("/nonexistent/cfg.ini"), ConfigError);
}

TEST(Validation, ReferenceConfigPasses) {
    const auto v = validate_config(RunConfig{});
    EXPECT_TRUE(v.ok) << v.text;
    EXPECT_NE(v.text.find("mu = 0.0827"), std::string::npos) << v.text;
    EXPECT_NE(v.text.find("slack"), std::string::npos);
}

TEST(Validation, GammaBoundaryFailsWithMessage) {
    // b exactly 2 eps(T), written with round-trip precision.
    const double lambda = 2.4958, T = 0.25;
    std::ostringstream ini;
    ini << std::setprecision(17) << "[model]\nT = " << T << "\nrho = -1\n[measure]\nkind = gamma\nlambda = " << lambda
        << "\na = 0.1\nb = " << 2.0 * ou_epsilon(lambda, T) << "\n[experiment]\nmaturities = 0.25\n";
    const auto c = parse(ini.str());
    const auto v = validate_config(c);
    EXPECT_FALSE(v.ok);
    EXPECT_NE(v.text.find("exponential moment condition violated"), std::string::npos) << v.text;
}

TEST(Validation, LongMaturityInListIsChecked) {
    RunConfig c;
    c.kind = MeasureKind::GammaOU;
    c.b = 2.0 * ou_epsilon(c.lambda, 0.3);
    c.T = 0.1;
    c.maturities = {0.1, 0.4};
    EXPECT_FALSE(validate_config(c).ok);
}

TEST(StrikePanel, MonotoneAndBoundedByArbitrage) {
    RunConfig c;
    c.sim.n_paths = 4000;
    std::ostringstream os;
    write_strike_panel(os, c, parse_value_list("440:480:2"), 0.25);
    std::string header;
    const auto rows = read_csv(os.str(), &header);
    EXPECT_EQ(header, "K,V0,V0_se,BS_sigma0,BS_Vbar");
    ASSERT_EQ(rows.size(), 21u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i][1], rows[i - 1][1]);  // shared paths: exactly monotone in K
        EXPECT_LT(rows[i][3], rows[i - 1][3]);
        EXPECT_LT(rows[i][4], rows[i - 1][4]);
    }
    for (const auto& r : rows) {
        EXPECT_GT(r[1], std::max(468.44 - r[0] * std::exp(-0.01 * 0.25), 0.0));
        EXPECT_LT(r[1], 468.44);
        EXPECT_GT(r[1], r[3]);  // leverage jumps add value over BS at sigma0
    }
}

TEST(MaturityPanel, ShortMaturitiesApproachBlackScholes) {
    RunConfig c;
    c.sim.n_paths = 4000;
    std::ostringstream os;
    write_maturity_panel(os, c, 460.0, {0.002, 0.02, 0.2});
    const auto rows = read_csv(os.str());
    ASSERT_EQ(rows.size(), 3u);
    auto gap = [](const std::vector<double>& r) { return std::abs(r[1] - r[3]) / r[3]; };
    EXPECT_LT(gap(rows[0]), gap(rows[2]));
    for (const auto& r : rows) EXPECT_NEAR(r[3], r[4], 0.2 * r[3]);
}

TEST(PriceTable, OneRowPerStrikeAndMaturity) {
    RunConfig c;
    c.sim.n_paths = 500;
    std::ostringstream os;
    write_price_table(os, c);
    std::string header;
    const auto rows = read_csv(os.str(), &header);
    EXPECT_EQ(header, "K,T,V0,V0_se,BS_sigma0,BS_Vbar");
    EXPECT_EQ(rows.size(), c.strikes.size() * c.maturities.size());
    EXPECT_EQ(os.str().find('\r'), std::string::npos);
}
