#pragma once

// Driftless, zero-rate Black-Scholes call: dS = S sigma0 dB.

#include <algorithm>
#include <cmath>

#include "pbs/errors.hpp"
#include "pbs/normal.hpp"

namespace pbs {

template <typename Scalar = double>
struct MarketSpec {
    Scalar spot{};
    Scalar strike{};
    Scalar maturity{};
    Scalar sigma0{};

    Scalar cumulated_vol() const {
        using std::sqrt;
        return sigma0 * sqrt(maturity);
    }
    Scalar total_variance() const { return sigma0 * sigma0 * maturity; }
};

template <typename Scalar = double>
struct Greeks {
    Scalar premium{};
    Scalar delta{};       // dF/dx
    Scalar vega{};        // dF/dsigma
    Scalar vomma{};       // d2F/dsigma2
    Scalar vanna{};       // d2F/dsigma dx
    Scalar dual_gamma{};  // d2F/dK2
    Scalar d1{};
    Scalar d2{};
};

template <typename Scalar>
void validate(const MarketSpec<Scalar>& m) {
    using std::isfinite;
    const bool ok = isfinite(m.spot) && isfinite(m.strike) && isfinite(m.maturity) &&
                    isfinite(m.sigma0) && m.spot > Scalar(0) && m.strike > Scalar(0) &&
                    m.maturity > Scalar(0) && m.sigma0 > Scalar(0);
    if (!ok) {
        throw ArgumentError("market: spot, strike, maturity and sigma0 must be positive and finite");
    }
}

template <typename Scalar>
struct DPair {
    Scalar d1;
    Scalar d2;
};

template <typename Scalar>
DPair<Scalar> d_terms(const MarketSpec<Scalar>& m) {
    using std::log;
    const Scalar v = m.cumulated_vol();
    const Scalar d1 = (log(m.spot / m.strike) + Scalar(0.5) * v * v) / v;
    return {d1, d1 - v};
}

// Premium above intrinsic value, computed on the out-of-the-money side so that
// deep in- or out-of-the-money values keep their relative accuracy.
template <typename Scalar>
Scalar bs_time_value(const MarketSpec<Scalar>& m) {
    validate(m);
    const auto [d1, d2] = d_terms(m);
    if (m.spot >= m.strike) {
        return m.strike * normal_cdf(-d2) - m.spot * normal_cdf(-d1);
    }
    return m.spot * normal_cdf(d1) - m.strike * normal_cdf(d2);
}

template <typename Scalar>
Scalar bs_price(const MarketSpec<Scalar>& m) {
    using std::max;
    return max(m.spot - m.strike, Scalar(0)) + bs_time_value(m);
}

template <typename Scalar>
Greeks<Scalar> bs_greeks(const MarketSpec<Scalar>& m) {
    using std::sqrt;
    const Scalar premium = bs_price(m);
    const auto [d1, d2] = d_terms(m);
    const Scalar pdf = normal_pdf(d1);
    const Scalar sqrt_t = sqrt(m.maturity);
    const Scalar v = m.sigma0 * sqrt_t;

    Greeks<Scalar> g;
    g.premium = premium;
    g.delta = normal_cdf(d1);
    g.vega = m.spot * sqrt_t * pdf;
    g.vomma = g.vega * d1 * d2 / m.sigma0;
    g.vanna = -d2 * pdf / m.sigma0;
    g.dual_gamma = m.spot * pdf / (m.strike * m.strike * v);
    g.d1 = d1;
    g.d2 = d2;
    return g;
}

// dC/dT; under zero rates this is sigma0^2 K^2 / 2 times dC/dK^2.
template <typename Scalar>
Scalar bs_maturity_derivative(const MarketSpec<Scalar>& m) {
    using std::sqrt;
    validate(m);
    const auto [d1, d2] = d_terms(m);
    (void)d2;
    return m.spot * normal_pdf(d1) * m.sigma0 / (Scalar(2) * sqrt(m.maturity));
}

struct ImpliedVolOptions {
    double price_tolerance = 1e-10;  // relative to spot
    int max_iterations = 100;
};

// Inverts bs_price in sigma. Throws DomainError outside the open no-arbitrage
// band (max(x - K, 0), x) and NumericError if it fails to converge.
double implied_vol(double price, double spot, double strike, double maturity,
                   const ImpliedVolOptions& options = {});

}  // namespace pbs
