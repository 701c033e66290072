#include "pbs/black_scholes.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace pbs {

double implied_vol(double price, double spot, double strike, double maturity,
                   const ImpliedVolOptions& options) {
    validate(MarketSpec<double>{spot, strike, maturity, 1.0});
    if (!std::isfinite(price)) throw DomainError("implied_vol: price is not finite");

    const double intrinsic = std::max(spot - strike, 0.0);
    const double target = price - intrinsic;
    if (!(target > 0.0) || !(price < spot)) {
        throw DomainError("implied_vol: price " + std::to_string(price) +
                          " outside the no-arbitrage band (" + std::to_string(intrinsic) + ", " +
                          std::to_string(spot) + ")");
    }

    const double sqrt_t = std::sqrt(maturity);
    auto excess = [&](double sigma) {
        return bs_time_value(MarketSpec<double>{spot, strike, maturity, sigma}) - target;
    };

    double lo = 0.0;
    double hi = 1.0;
    while (excess(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e4) throw NumericError("implied_vol: could not bracket the volatility");
    }

    double sigma = std::sqrt(2.0 * std::numbers::pi) * price / (spot * sqrt_t);
    if (!(sigma > lo && sigma < hi)) sigma = 0.5 * (lo + hi);

    for (int it = 0; it < options.max_iterations; ++it) {
        const double g = excess(sigma);
        if (g == 0.0) return sigma;
        if (g > 0.0) {
            hi = sigma;
        } else {
            lo = sigma;
        }
        const double vega = spot * sqrt_t * normal_pdf(d_terms(MarketSpec<double>{spot, strike, maturity, sigma}).d1);
        double next = sigma - g / vega;
        if (!(vega > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);

        const double step = std::abs(next - sigma);
        sigma = next;
        if (step <= 1e-15 * sigma || hi - lo <= 1e-15 * hi) {
            if (std::abs(excess(sigma)) <= options.price_tolerance * spot) return sigma;
            break;
        }
    }
    if (std::abs(excess(sigma)) <= options.price_tolerance * spot) return sigma;
    throw NumericError("implied_vol: no convergence after " +
                       std::to_string(options.max_iterations) + " iterations");
}

}  // namespace pbs
