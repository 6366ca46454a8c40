// Command-line front end: validate, price, decompose, figure1a, figure1b, simulate.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "bns/experiments.hpp"

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<long long> paths;
    std::string out;
    std::optional<double> rho;
};

bns::RunConfig load(const Options& o) {
    bns::RunConfig cfg = o.config.empty() ? bns::RunConfig{} : bns::load_run_config(o.config);
    if (o.seed) cfg.sim.seed = *o.seed;
    if (o.paths) {
        if (*o.paths < 1) throw bns::ConfigError("--paths must be >= 1");
        cfg.sim.n_paths = static_cast<std::size_t>(*o.paths);
    }
    if (o.rho) {
        if (*o.rho > 0.0) throw bns::ConfigError("--rho-override must be <= 0");
        cfg.rho = *o.rho;
    }
    if (!o.out.empty()) cfg.output_path = o.out;
    return cfg;
}

// Binary mode keeps LF line endings on every platform.
template <class F>
void with_output(const std::string& path, F&& f) {
    if (path.empty() || path == "-") {
        f(std::cout);
        return;
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open output file '" + path + "'");
    f(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

int run(const std::string& verb, const Options& opts) {
    const auto cfg = load(opts);
    const auto v = bns::validate_config(cfg);
    if (verb == "validate") {
        std::cout << v.text;
        return v.ok ? bns::kExitOk : bns::kExitValidation;
    }
    if (!v.ok) {
        std::cerr << v.text;
        return bns::kExitValidation;
    }
    if (verb == "price") {
        with_output(cfg.output_path, [&](std::ostream& os) { bns::write_price_table(os, cfg); });
    } else if (verb == "figure1a") {
        cfg.params();  // maturity check
        with_output(cfg.output_path,
                    [&](std::ostream& os) { bns::write_strike_panel(os, cfg, cfg.figure_strikes, cfg.T); });
    } else if (verb == "figure1b") {
        with_output(cfg.output_path, [&](std::ostream& os) {
            bns::write_maturity_panel(os, cfg, cfg.figure_strike, cfg.figure_maturities);
        });
    } else if (verb == "decompose") {
        bns::DecomposeRun result;
        if (cfg.output_path.empty() || cfg.output_path == "-") {
            result = bns::run_decompose(cfg, std::cout, &std::cerr);
        } else {
            with_output(cfg.output_path, [&](std::ostream& os) { result = bns::run_decompose(cfg, os, &std::cout); });
        }
        if (!result.all_pass) {
            std::cerr << "residual test failed for at least one (K, T)\n";
            return bns::kExitResidual;
        }
    } else if (verb == "simulate") {
        with_output(cfg.output_path, [&](std::ostream& os) { bns::run_simulate(cfg, os); });
    }
    return bns::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BNS stochastic-volatility pricing and decomposition"};
    app.require_subcommand(1);
    Options opts;
    const char* verbs[][2] = {
        {"validate", "Check the parameter set and print derived quantities"},
        {"price", "Monte-Carlo prices over the configured strikes and maturities"},
        {"decompose", "Estimate every term of the price decomposition"},
        {"figure1a", "Strike sweep: V0 and two Black-Scholes benchmarks"},
        {"figure1b", "Maturity sweep: V0 and two Black-Scholes benchmarks"},
        {"simulate", "Dump sample paths (path_id,time,x,sigma2,jump_size)"},
    };
    for (const auto& [name, help] : verbs) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", opts.seed, "Random seed");
        sub->add_option("--paths", opts.paths, "Number of Monte-Carlo paths");
        sub->add_option("--out", opts.out, "Output file (default: stdout)");
        sub->add_option("--rho-override", opts.rho, "Replace the leverage parameter rho");
    }
    CLI11_PARSE(app, argc, argv);

    const std::string verb = app.get_subcommands().front()->get_name();
    try {
        return run(verb, opts);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bns::kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return bns::kExitNumeric;
    }
}
