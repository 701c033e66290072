#pragma once

// Perturbed Black-Scholes pricing: the trader hedges with an uncertain
// volatility, and the bias / variance of the hedging P&L turn into a mid-price
// shift and a bid-ask spread.
//
// Two parameterisations of the volatility error are in use:
//   * on sigma itself (pnl_moments, quote);
//   * on the cumulated volatility sigma*sqrt(T) (call_bias and the strike /
//     maturity derivatives).
// For a time-independent sigma, A[sigma sqrt T] = sqrt(T) A[sigma] and
// Gamma[sigma sqrt T] = T Gamma[sigma]. Maturity derivatives hold A[sigma] and
// Gamma[sigma] fixed, which also keeps the relative index constant in T.

#include "pbs/black_scholes.hpp"
#include "pbs/error_calculus.hpp"

namespace pbs {

// Evaluation function h of the P&L, known through h'(0) and h''(0).
struct HFunction {
    double h1 = 1.0;
    double h2 = 0.0;

    static HFunction identity() { return {}; }
    static HFunction from_supply_demand_index(double r_sd, double h1 = 1.0) { return {h1, r_sd * h1}; }

    // r_{S/D} = h''(0) / h'(0): > 0 when demand exceeds supply.
    double supply_demand_index() const { return h2 / h1; }
    double operator()(double pnl) const { return h1 * pnl + 0.5 * h2 * pnl * pnl; }
};

void validate(const HFunction& h);

struct PnLMoments {
    double upsilon1 = 0.0;
    double upsilon2 = 0.0;
    double lambda = 0.0;
    double bias = 0.0;      // A[E[h(P&L)]]
    double variance = 0.0;  // Gamma[E[h(P&L)]]
};

struct Quote {
    double bid = 0.0;
    double mid = 0.0;
    double ask = 0.0;
    double alpha = 0.0;

    double spread() const { return ask - bid; }
};

ErrorStructure<> to_cumulated_vol(const ErrorStructure<>& on_sigma, double maturity);
ErrorStructure<> to_volatility(const ErrorStructure<>& on_cumulated, double maturity);
// Moves a cumulated-volatility error structure between maturities, holding the
// per-unit-sigma densities fixed.
ErrorStructure<> rescale_maturity(const ErrorStructure<>& on_cumulated, double from_maturity,
                                  double to_maturity);

// Error structure with bias chosen so that 2 X A / Gamma equals relative_index.
ErrorStructure<> with_relative_index(double value, double relative_index, double variance,
                                     double epsilon);

// r_r(X) = 2 X A[X] / Gamma[X]; independent of epsilon.
double relative_index(const ErrorStructure<>& es);

// E[S_t^2 (d2F/dsigma dx)(sigma0, S_t, t)^2] under the true dynamics.
double spot_vanna_moment(const MarketSpec<>& m, double t);

// Integral over [0, T] of spot_vanna_moment, by n_quad-point Gauss-Legendre.
double spot_vanna_integral(const MarketSpec<>& m, int n_quad);

inline constexpr int kDefaultQuadratureNodes = 32;

// Bias and variance of E[h(P&L)]. es lives on sigma and must sit at m.sigma0.
PnLMoments pnl_moments(const ErrorStructure<>& es, const MarketSpec<>& m, const HFunction& h,
                       int n_quad = kDefaultQuadratureNodes);

// Bid / mid / ask with risk level alpha in (0, 0.5).
Quote quote(const ErrorStructure<>& es, const MarketSpec<>& m, const HFunction& h, double alpha,
            int n_quad = kDefaultQuadratureNodes);

// Call-premium bias A[C]; es lives on the cumulated volatility at m.
double call_bias(const ErrorStructure<>& es, const MarketSpec<>& m);

struct StrikeDerivatives {
    double dA_dK = 0.0;
    double d2A_dK2 = 0.0;
};

StrikeDerivatives bias_strike_derivs(const ErrorStructure<>& es, const MarketSpec<>& m);

struct MaturityDerivatives {
    double dA_dT = 0.0;
    double d2A_dKdT = 0.0;
    double d3A_dK2dT = 0.0;
};

// Closed forms at the money; away from it the cross derivatives are
// differentiated numerically in K from the closed-form dA/dT.
MaturityDerivatives bias_maturity_derivs(const ErrorStructure<>& es, const MarketSpec<>& m);

// Thresholds on r_r, as functions of the total variance y = sigma0^2 T.
inline double bias_sign_bound(double y) { return 0.25 * y; }
inline double convexity_bound(double y) { return (y * y + 4.0 * y + 32.0) / (4.0 * y + 16.0); }
// Theta, indexed by the cumulated volatility sigma0 sqrt(T).
inline double theta_bound(double cumulated_vol) { return convexity_bound(cumulated_vol * cumulated_vol); }
// Zero of d2A/dKdT at the money; a lower bound for y < 4, an upper bound for y > 4.
double slope_time_bound(double y);
inline double smile_time_bound(double y) {
    const double s = y - 4.0;
    return 0.25 * (y * s * s + 128.0) / (16.0 + y * y);
}

inline constexpr double kBoundaryTolerance = 1e-12;

struct SmileConditionReport {
    double relative_index = 0.0;
    double atm_bias = 0.0;
    bool atm_bias_positive = false;
    bool atm_convex = false;
    bool slope_increases_with_T = false;
    bool smile_increases_with_T = false;
    // For y > 4 the slope condition reads r_r < slope_time.
    bool slope_bound_is_upper = false;

    struct Thresholds {
        double bias = 0.0;
        double convexity = 0.0;
        double slope_time = 0.0;
        double smile_time = 0.0;
    } thresholds;

    // r_r equal to the threshold within kBoundaryTolerance.
    struct Boundary {
        bool bias = false;
        bool convexity = false;
        bool slope_time = false;
        bool smile_time = false;
    } on_boundary;
};

SmileConditionReport smile_conditions(const ErrorStructure<>& es, const MarketSpec<>& m);

}  // namespace pbs
