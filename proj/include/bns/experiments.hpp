#pragma once

// Orchestration behind the command-line verbs. Every writer emits CSV with a
// header row, 17 significant digits and LF line endings.

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bns/black_scholes.hpp"
#include "bns/config.hpp"
#include "bns/decomposition.hpp"
#include "bns/path_engine.hpp"

namespace bns {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitResidual = 3, kExitNumeric = 4 };

struct ValidationReport {
    bool ok = true;
    std::string text;
};

/// Checks the parameter set at the model maturity and at every experiment
/// maturity; prints mu, the tail-condition slack, a/b and the variance floor.
inline ValidationReport validate_config(const RunConfig& cfg) {
    ValidationReport rep;
    std::ostringstream os;
    os << std::setprecision(10);
    os << "measure: " << to_string(cfg.kind) << " (lambda = " << cfg.lambda << ", a = " << cfg.a
       << ", b = " << cfg.b << ")\n";
    os << "stationary mean a/b = " << cfg.a / cfg.b << '\n';
    std::vector<double> horizons{cfg.T};
    for (double t : cfg.maturities)
        if (t != cfg.T) horizons.push_back(t);
    bool mu_printed = false;
    for (double T : horizons) {
        try {
            const auto p = cfg.params_at(T);
            if (!mu_printed) {
                os << "mu = " << p.mu() << '\n';
                mu_printed = true;
            }
            os << "T = " << T << ": tail-condition slack = " << p.tail_slack()
               << ", variance floor e^{-lambda T} sigma0^2 = " << p.variance_floor() << '\n';
        } catch (const std::invalid_argument& e) {
            rep.ok = false;
            os << "T = " << T << ": FAILED: " << e.what() << '\n';
        }
    }
    try {
        cfg.sim.validate(cfg.measure());
    } catch (const std::invalid_argument& e) {
        rep.ok = false;
        os << "sim: FAILED: " << e.what() << '\n';
    }
    os << (rep.ok ? "validation passed\n" : "validation failed\n");
    rep.text = os.str();
    return rep;
}

namespace detail {

inline std::ostream& csv_stream(std::ostream& os) {
    os << std::setprecision(17);
    os.unsetf(std::ios::floatfield);
    return os;
}

inline double bs_at(const BnsParams& p, double K, double sigma2) {
    const auto s = p.initial_state();
    return bs_price(BsPoint{s.t, s.x, sigma2, K, p.r(), p.T()});
}

}  // namespace detail

/// Strike sweep at maturity T on one shared path set.
/// Columns: K, V0, V0_se, BS_sigma0, BS_Vbar.
inline void write_strike_panel(std::ostream& os, const RunConfig& cfg, const std::vector<double>& strikes, double T) {
    const auto p = cfg.params_at(T);
    const auto s = p.initial_state();
    const auto laws = sample_conditional_laws(p, s, cfg.sim);
    const double vbar = avg_future_variance(s, p);
    detail::csv_stream(os) << "K,V0,V0_se,BS_sigma0,BS_Vbar\n";
    std::vector<double> v(laws.size());
    for (double K : strikes) {
        for (std::size_t i = 0; i < laws.size(); ++i) v[i] = conditional_call(laws[i], K, p.r(), T);
        const auto e = mean_and_se(v);
        os << K << ',' << e.price << ',' << e.std_error << ',' << detail::bs_at(p, K, p.sigma0_sq()) << ','
           << detail::bs_at(p, K, vbar) << '\n';
    }
}

/// Maturity sweep at strike K; each maturity gets its own path set.
/// Columns: T, V0, V0_se, BS_sigma0, BS_Vbar.
inline void write_maturity_panel(std::ostream& os, const RunConfig& cfg, double K, const std::vector<double>& maturities) {
    detail::csv_stream(os) << "T,V0,V0_se,BS_sigma0,BS_Vbar\n";
    for (double T : maturities) {
        const auto p = cfg.params_at(T);
        const auto s = p.initial_state();
        const auto e = mc_price(p, s, K, cfg.sim);
        os << T << ',' << e.price << ',' << e.std_error << ',' << detail::bs_at(p, K, p.sigma0_sq()) << ','
           << detail::bs_at(p, K, avg_future_variance(s, p)) << '\n';
    }
}

/// Prices over the configured strike x maturity grid.
inline void write_price_table(std::ostream& os, const RunConfig& cfg) {
    detail::csv_stream(os) << "K,T,V0,V0_se,BS_sigma0,BS_Vbar\n";
    for (double T : cfg.maturities) {
        const auto p = cfg.params_at(T);
        const auto s = p.initial_state();
        const auto laws = sample_conditional_laws(p, s, cfg.sim);
        const double vbar = avg_future_variance(s, p);
        std::vector<double> v(laws.size());
        for (double K : cfg.strikes) {
            for (std::size_t i = 0; i < laws.size(); ++i) v[i] = conditional_call(laws[i], K, p.r(), T);
            const auto e = mean_and_se(v);
            os << K << ',' << T << ',' << e.price << ',' << e.std_error << ',' << detail::bs_at(p, K, p.sigma0_sq())
               << ',' << detail::bs_at(p, K, vbar) << '\n';
        }
    }
}

struct DecomposeRun {
    std::vector<DecompositionReport> reports;
    bool all_pass = true;
};

/// One report per (K, T); CSV rows go to `csv`, text blocks to `text` when given.
inline DecomposeRun run_decompose(const RunConfig& cfg, std::ostream& csv, std::ostream* text = nullptr) {
    DecomposeRun run;
    csv << decomposition_csv_header() << '\n';
    for (double T : cfg.maturities) {
        const auto p = cfg.params_at(T);
        for (double K : cfg.strikes) {
            auto rep = decompose(p, p.initial_state(), K, cfg.sim, cfg.decomposition);
            csv << decomposition_csv_row(rep) << '\n';
            if (text) write_decomposition_text(*text, rep);
            run.all_pass = run.all_pass && rep.residual_passes();
            run.reports.push_back(std::move(rep));
        }
    }
    return run;
}

inline void run_simulate(const RunConfig& cfg, std::ostream& os) {
    const auto p = cfg.params();
    SimConfig sim = cfg.sim;
    sim.n_paths = cfg.dump_paths;
    std::vector<double> grid = cfg.path_grid;
    if (grid.empty()) {
        for (int i = 0; i <= 50; ++i) grid.push_back(p.T() * i / 50.0);
    }
    std::sort(grid.begin(), grid.end());
    write_path_dump(os, p, p.initial_state(), sim, grid);
}

}  // namespace bns
