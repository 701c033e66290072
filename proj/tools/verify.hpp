#pragma once

// Oracle suites shared by `pbs verify` and the acceptance runner.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pbs/black_scholes.hpp"
#include "pbs/error_calculus.hpp"
#include "pbs/pricing.hpp"

namespace pbs::verify {

struct Check {
    std::string suite;
    std::string name;
    double value = 0.0;
    double std_error = std::numeric_limits<double>::quiet_NaN();  // NaN: deterministic
    double target = 0.0;
    double tolerance = 0.0;  // |value - target| <= tolerance
    bool pass = false;
};

struct Options {
    MarketSpec<> market{100.0, 100.0, 1.0, 0.2};
    ErrorStructure<> es{0.2, 0.0, 0.04, 0.01};  // on sigma
    HFunction h;
    double alpha = 0.1;
    std::uint64_t seed = 7;
    int n_paths = 20000;
    int n_steps = 512;
    int n_draws = 2000;
    int threads = 0;
};

inline constexpr double kStandardErrors = 3.0;

// Analytic vega, vomma, vanna and dual gamma against central differences of
// bs_price taken in 50-digit arithmetic, on a 5 x 5 x 5 grid.
std::vector<Check> greeks(double rel_tol = 1e-6);

// simulate_pnl against the first-order bias and variance.
std::vector<Check> theorem41(const Options& o);

// Monte Carlo second moment against quadrature, with Gamma = 1.
std::vector<Check> upsilon2(const Options& o);

// bid + ask = 2 mid on 1000 random configurations, and the spread against
// Monte Carlo quantiles of C_BS(sigma) under the perturbed sigma.
std::vector<Check> quote(const Options& o);

// GBM integrand: (1/t) E[(M_t - N_t)^2] decreasing over t = 0.1, 0.05, 0.025.
std::vector<Check> lemma(const Options& o);

std::vector<std::string> suite_names();
std::vector<Check> run_suite(const std::string& name, const Options& o);

inline bool all_pass(const std::vector<Check>& checks) {
    for (const auto& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

}  // namespace pbs::verify
