#pragma once

// Monte Carlo oracle for the hedging P&L: the market follows Black-Scholes
// with the true sigma0, the trader prices and delta-hedges with a volatility
// drawn from the perturbed distribution.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pbs/black_scholes.hpp"
#include "pbs/error_calculus.hpp"
#include "pbs/errors.hpp"
#include "pbs/pricing.hpp"

namespace pbs {

struct SimConfig {
    MarketSpec<> market;
    ErrorStructure<> es;  // on sigma, at market.sigma0
    HFunction h;
    int n_paths = 20000;
    int n_steps = 512;
    int n_sigma_draws = 2000;
    std::uint64_t seed = 0;
    int threads = 0;  // 0: PBS_THREADS, else hardware concurrency
    std::optional<std::chrono::milliseconds> time_budget;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;

    // |value - target| <= n_se * std_error
    bool within(double target, double n_se = 3.0) const;
};

struct DrawSummary {
    double sigma = 0.0;
    double mean = 0.0;  // E[h(P&L) | sigma] over the paths
    double std_error = 0.0;
};

struct SimResult {
    Estimate bias_est;      // mean of h(P&L); compare with eps * A[E[h(P&L)]]
    Estimate variance_est;  // across-draw variance of conditional means; compare with eps * Gamma
    std::vector<DrawSummary> draws;
    double time_step = 0.0;
    int n_paths = 0;
    int n_steps = 0;
    int n_sigma_draws = 0;
};

// Thrown when the time budget runs out; carries how far the run got.
class PartialResultError : public NumericError {
public:
    PartialResultError(const std::string& what, int completed_paths, int requested_paths)
        : NumericError(what), completed_paths_(completed_paths), requested_paths_(requested_paths) {}
    int completed_paths() const { return completed_paths_; }
    int requested_paths() const { return requested_paths_; }

private:
    int completed_paths_;
    int requested_paths_;
};

void validate(const SimConfig& cfg);

// Worker count: requested if positive, else PBS_THREADS, else the hardware.
int resolve_thread_count(int requested);

// Paths are shared by all sigma-draws (common random numbers): path p uses the
// normals keyed by (seed, p, step), draw j the normal keyed by (seed, j).
SimResult simulate_pnl(const SimConfig& cfg);

// Monte Carlo value of {vega^2 + sigma0^2 int_0^T E[S_t^2 vanna^2] dt} Gamma,
// sampling t uniformly (stratified over paths) and S_t exactly.
Estimate estimate_upsilon2(const SimConfig& cfg);

struct LemmaConfig {
    int n_paths = 100000;
    int n_steps = 256;  // Euler steps per horizon
    std::uint64_t seed = 0;
    int threads = 0;
};

struct LemmaRow {
    double t = 0.0;
    Estimate statistic;  // (1/t) E[(M_t - N_t)^2]
};

// M_t = int_0^t F'(X_s) a(X_s) dB_s against its frozen-integrand version
// N_t = F'(X_0) a(X_0) B_t.
std::vector<LemmaRow> lemma_small_t_check(const DiffusionSpec<>& spec,
                                          const SmoothFunctionProbe<>& probe,
                                          std::span<const double> t_grid,
                                          const LemmaConfig& cfg = {});

// Each row is below its predecessor, allowing n_se combined standard errors.
bool decreasing_within(std::span<const LemmaRow> rows, double n_se = 3.0);

}  // namespace pbs
