#pragma once

// Implied-volatility smile of the perturbed model and the local-volatility
// surface that reproduces its vanilla prices.
//
// Error structures here live on the cumulated volatility sigma0 sqrt(T) at the
// base market's maturity; other maturities are reached with rescale_maturity.

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pbs/black_scholes.hpp"
#include "pbs/error_calculus.hpp"
#include "pbs/errors.hpp"

namespace pbs {

struct SmilePoint {
    double strike = 0.0;
    double maturity = 0.0;
    double mid_price = 0.0;
    double implied_vol = std::numeric_limits<double>::quiet_NaN();
    double bias_contribution = 0.0;  // epsilon * A[C]
    bool band_violation = false;
    std::string error;
};

struct LocalVolPoint {
    double strike = 0.0;
    double maturity = 0.0;
    double local_variance = 0.0;
};

class PositivityError : public DomainError {
public:
    PositivityError(const std::string& what, double margin) : DomainError(what), margin_(margin) {}
    double margin() const { return margin_; }

private:
    double margin_;
};

// n strikes geometrically spaced over [lo_ratio, hi_ratio] * spot.
std::vector<double> geometric_strikes(double spot, double lo_ratio = 0.5, double hi_ratio = 2.0,
                                      int n = 41);

// Mid prices (h = identity) and their implied volatilities; points whose mid
// leaves the no-arbitrage band are flagged rather than aborting the grid.
std::vector<SmilePoint> implied_smile(const ErrorStructure<>& es, const MarketSpec<>& m,
                                      std::span<const double> strikes);

// First-order local variance at (K, T), without the positivity check.
double local_variance(const ErrorStructure<>& es, const MarketSpec<>& m, double strike,
                      double maturity);

// As local_variance; throws PositivityError when the at-the-money local
// variance at this maturity is not positive.
LocalVolPoint local_vol(const ErrorStructure<>& es, const MarketSpec<>& m, double strike,
                        double maturity);

// 2 sigma0^2 T / (eps Gamma) - (sigma0^2 T + 2 - 2 r_r) for es on the
// cumulated volatility; positive iff the at-the-money local variance is.
// +infinity when eps * Gamma = 0.
double positivity_margin(const ErrorStructure<>& es);

struct DupireSteps {
    double maturity = 1e-4;  // relative
    double strike = 1e-4;    // relative
};

struct DupireCheck {
    double ratio_variance = 0.0;        // dC/dT / (K^2/2 d2C/dK2) on the perturbed prices
    double first_order_variance = 0.0;  // local_variance
    double relative_gap = 0.0;
};

DupireCheck dupire_check(const ErrorStructure<>& es, const MarketSpec<>& m, double strike,
                         double maturity, const DupireSteps& steps = {});

}  // namespace pbs
