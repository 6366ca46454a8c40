#pragma once

// Run configuration from INI text with sections [model], [measure], [sim] and
// [experiment]. Every key is optional; missing keys keep the bundled defaults
// (the IG-OU reference parameter set).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bns/bns_model.hpp"
#include "bns/decomposition.hpp"
#include "bns/path_engine.hpp"

namespace bns {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Experiment { Price, Decompose, Figure1A, Figure1B, Validate, Simulate };

inline Experiment parse_experiment(const std::string& s) {
    const auto v = boost::algorithm::to_lower_copy(s);
    if (v == "price") return Experiment::Price;
    if (v == "decompose") return Experiment::Decompose;
    if (v == "figure1a") return Experiment::Figure1A;
    if (v == "figure1b") return Experiment::Figure1B;
    if (v == "validate") return Experiment::Validate;
    if (v == "simulate") return Experiment::Simulate;
    throw ConfigError("unknown experiment '" + s + "'");
}

/// "a,b,c" or an inclusive range "start:stop:step".
inline std::vector<double> parse_value_list(const std::string& text) {
    const auto s = boost::algorithm::trim_copy(text);
    if (s.empty()) throw ConfigError("empty value list");
    auto num = [&](const std::string& tok) {
        const auto t = boost::algorithm::trim_copy(tok);
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(t, &pos);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + t + "' in '" + s + "'");
        }
        if (pos != t.size() || !std::isfinite(v)) throw ConfigError("not a number: '" + t + "' in '" + s + "'");
        return v;
    };
    std::vector<std::string> parts;
    if (s.find(':') != std::string::npos) {
        boost::algorithm::split(parts, s, boost::is_any_of(":"));
        if (parts.size() != 3) throw ConfigError("range must be start:stop:step, got '" + s + "'");
        const double a = num(parts[0]), b = num(parts[1]), h = num(parts[2]);
        if (!(h > 0.0)) throw ConfigError("range step must be positive in '" + s + "'");
        if (b < a) throw ConfigError("range stop below start in '" + s + "'");
        // Index-based so 440:480:0.1 hits 480 without accumulating drift.
        const auto n = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9));
        std::vector<double> out;
        for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * h);
        return out;
    }
    boost::algorithm::split(parts, s, boost::is_any_of(","));
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(num(p));
    return out;
}

struct RunConfig {
    // [model]
    double S0 = 468.44;
    double sigma0 = 0.064262;
    double rho = -4.7039;
    double r = 0.01;
    double T = 0.25;
    // [measure]
    MeasureKind kind = MeasureKind::InverseGaussianOU;
    double lambda = 2.4958;
    double a = 0.0872;
    double b = 11.98;
    // [sim]
    SimConfig sim;
    // [experiment]
    Experiment experiment = Experiment::Decompose;
    std::vector<double> strikes{440.0, 460.0, 480.0};
    std::vector<double> maturities{0.1, 0.25, 0.4};
    DecompositionConfig decomposition;
    std::vector<double> path_grid;  // simulate: diagnostic grid
    std::size_t dump_paths = 10;    // simulate: number of paths written
    std::vector<double> figure_strikes = parse_value_list("440:480:0.1");     // figure1a, at model.T
    std::vector<double> figure_maturities = parse_value_list("0.02:0.40:0.02");  // figure1b
    double figure_strike = 460.0;                                            // figure1b
    std::string output_path;

    LevyMeasureSpec measure() const { return {kind, lambda, a, b}; }
    BnsParams params() const { return params_at(T); }
    BnsParams params_at(double maturity) const {
        return {S0, sigma0 * sigma0, rho, r, maturity, measure()};
    }
};

namespace detail {

template <class T>
T ini_get(const boost::property_tree::ptree& pt, const std::string& path, T fallback) {
    const auto node = pt.get_optional<std::string>(path);
    if (!node) return fallback;
    const auto text = boost::algorithm::trim_copy(*node);
    std::istringstream is(text);
    T v{};
    is >> v;
    if (is.fail() || !is.eof()) throw ConfigError("key " + path + ": cannot parse value '" + text + "'");
    return v;
}

inline std::string ini_get_string(const boost::property_tree::ptree& pt, const std::string& path,
                                  const std::string& fallback) {
    const auto node = pt.get_optional<std::string>(path);
    return node ? boost::algorithm::trim_copy(*node) : fallback;
}

}  // namespace detail

/// Parses INI text. `origin` names the source in error messages.
inline RunConfig parse_run_config(std::istream& in, const std::string& origin = "<config>") {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    static const char* known[] = {"model", "measure", "sim", "experiment"};
    for (const auto& [section, _] : tree) {
        bool ok = false;
        for (const char* k : known) ok = ok || section == k;
        if (!ok) throw ConfigError(origin + ": unknown section [" + section + "]");
    }

    using detail::ini_get;
    using detail::ini_get_string;
    RunConfig c;
    c.S0 = ini_get(tree, "model.S0", c.S0);
    c.sigma0 = ini_get(tree, "model.sigma0", c.sigma0);
    if (tree.get_optional<std::string>("model.sigma0_sq")) {
        const double v = ini_get(tree, "model.sigma0_sq", 0.0);
        if (!(v > 0.0)) throw ConfigError("model.sigma0_sq must be positive");
        c.sigma0 = std::sqrt(v);
    }
    c.rho = ini_get(tree, "model.rho", c.rho);
    if (c.rho > 0.0) throw ConfigError("model.rho must be <= 0 (got " + std::to_string(c.rho) + ")");
    c.r = ini_get(tree, "model.r", c.r);
    c.T = ini_get(tree, "model.T", c.T);

    const auto kind = boost::algorithm::to_lower_copy(ini_get_string(tree, "measure.kind", "ig"));
    if (kind == "ig" || kind == "ig_ou" || kind == "inverse_gaussian") {
        c.kind = MeasureKind::InverseGaussianOU;
    } else if (kind == "gamma" || kind == "gamma_ou") {
        c.kind = MeasureKind::GammaOU;
    } else {
        throw ConfigError("measure.kind must be ig or gamma, got '" + kind + "'");
    }
    c.lambda = ini_get(tree, "measure.lambda", c.lambda);
    c.a = ini_get(tree, "measure.a", c.a);
    c.b = ini_get(tree, "measure.b", c.b);

    const long long n = ini_get<long long>(tree, "sim.n_paths", static_cast<long long>(c.sim.n_paths));
    if (n < 1) throw ConfigError("sim.n_paths must be >= 1");
    c.sim.n_paths = static_cast<std::size_t>(n);
    c.sim.seed = ini_get<std::uint64_t>(tree, "sim.seed", c.sim.seed);
    c.sim.ig_truncation = ini_get(tree, "sim.ig_truncation", c.sim.ig_truncation);
    const auto policy = boost::algorithm::to_lower_copy(ini_get_string(tree, "sim.small_jump_policy", "drift"));
    if (policy == "drift" || policy == "add_deterministic_drift") {
        c.sim.small_jump_policy = SmallJumpPolicy::AddDeterministicDrift;
    } else if (policy == "discard") {
        c.sim.small_jump_policy = SmallJumpPolicy::Discard;
    } else {
        throw ConfigError("sim.small_jump_policy must be drift or discard, got '" + policy + "'");
    }
    c.sim.threads = ini_get<unsigned>(tree, "sim.threads", c.sim.threads);

    if (auto e = tree.get_optional<std::string>("experiment.type")) c.experiment = parse_experiment(*e);
    if (auto s = tree.get_optional<std::string>("experiment.strikes")) c.strikes = parse_value_list(*s);
    if (auto s = tree.get_optional<std::string>("experiment.maturities")) c.maturities = parse_value_list(*s);
    if (auto s = tree.get_optional<std::string>("experiment.path_grid")) c.path_grid = parse_value_list(*s);
    if (auto s = tree.get_optional<std::string>("experiment.figure_strikes")) c.figure_strikes = parse_value_list(*s);
    if (auto s = tree.get_optional<std::string>("experiment.figure_maturities")) {
        c.figure_maturities = parse_value_list(*s);
    }
    c.figure_strike = ini_get(tree, "experiment.figure_strike", c.figure_strike);
    c.dump_paths = ini_get<std::size_t>(tree, "experiment.dump_paths", c.dump_paths);
    c.decomposition.time_nodes = ini_get(tree, "experiment.time_nodes", c.decomposition.time_nodes);
    c.decomposition.i5_outer_samples = ini_get(tree, "experiment.i5_outer_samples", c.decomposition.i5_outer_samples);
    c.decomposition.grid_check = ini_get<int>(tree, "experiment.grid_check", 0) != 0;
    const auto mode = boost::algorithm::to_lower_copy(ini_get_string(tree, "experiment.mode", "conditional"));
    if (mode == "conditional") {
        c.decomposition.mode = EstimatorMode::Conditional;
    } else if (mode == "pathwise") {
        c.decomposition.mode = EstimatorMode::Pathwise;
    } else {
        throw ConfigError("experiment.mode must be conditional or pathwise, got '" + mode + "'");
    }
    c.output_path = ini_get_string(tree, "experiment.output", c.output_path);

    for (double k : c.strikes)
        if (!(k > 0.0)) throw ConfigError("experiment.strikes must be positive");
    for (double t : c.maturities)
        if (!(t > 0.0)) throw ConfigError("experiment.maturities must be positive");
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_run_config(in, path);
}

}  // namespace bns
