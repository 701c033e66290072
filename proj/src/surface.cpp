#include "pbs/surface.hpp"

#include <cmath>

#include "pbs/pricing.hpp"

namespace pbs {
namespace {

MarketSpec<> at(const MarketSpec<>& m, double strike, double maturity) {
    MarketSpec<> out = m;
    out.strike = strike;
    out.maturity = maturity;
    validate(out);
    return out;
}

// Perturbed call price C = C_BS + eps A[C] on the (K, T) surface.
double perturbed_price(const ErrorStructure<>& es, const MarketSpec<>& m, double strike,
                       double maturity) {
    const auto point = at(m, strike, maturity);
    const auto local = rescale_maturity(es, m.maturity, maturity);
    return bs_price(point) + local.epsilon * call_bias(local, point);
}

}  // namespace

std::vector<double> geometric_strikes(double spot, double lo_ratio, double hi_ratio, int n) {
    if (!(spot > 0.0) || !(lo_ratio > 0.0) || !(hi_ratio >= lo_ratio) || n < 1) {
        throw ArgumentError("geometric_strikes: need spot > 0, 0 < lo <= hi and n >= 1");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = spot * std::sqrt(lo_ratio * hi_ratio);
        return out;
    }
    const double step = std::log(hi_ratio / lo_ratio) / (n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = spot * lo_ratio * std::exp(step * i);
    return out;
}

std::vector<SmilePoint> implied_smile(const ErrorStructure<>& es, const MarketSpec<>& m,
                                      std::span<const double> strikes) {
    validate(m);
    validate(es);
    std::vector<SmilePoint> out;
    out.reserve(strikes.size());
    for (const double k : strikes) {
        SmilePoint p;
        p.strike = k;
        p.maturity = m.maturity;
        try {
            const auto point = at(m, k, m.maturity);
            p.bias_contribution = es.epsilon * call_bias(es, point);
            p.mid_price = bs_price(point) + p.bias_contribution;
            p.implied_vol = implied_vol(p.mid_price, m.spot, k, m.maturity);
        } catch (const DomainError& e) {
            p.band_violation = true;
            p.error = e.what();
        } catch (const NumericError& e) {
            p.band_violation = true;
            p.error = e.what();
        }
        out.push_back(std::move(p));
    }
    return out;
}

double local_variance(const ErrorStructure<>& es, const MarketSpec<>& m, double strike,
                      double maturity) {
    validate(m);
    if (std::abs(es.value - m.cumulated_vol()) > 1e-12 * std::max(1.0, m.cumulated_vol())) {
        throw ArgumentError("local_variance: error structure must sit at sigma0 sqrt(T)");
    }
    const auto point = at(m, strike, maturity);
    const auto local = rescale_maturity(es, m.maturity, maturity);
    const double v = point.cumulated_vol();
    const double y = v * v;
    const double log_moneyness = std::log(point.spot / point.strike);
    const double bracket = 4.0 * local.bias / v -
                           (y + 2.0 - 4.0 * log_moneyness * log_moneyness / y) * local.variance / y;
    return point.sigma0 * point.sigma0 * (1.0 + 0.5 * local.epsilon * bracket);
}

double positivity_margin(const ErrorStructure<>& es) {
    validate(es);
    const double y = es.value * es.value;
    if (!(y > 0.0)) throw ArgumentError("positivity_margin: reference value must be non-zero");
    const double scale = es.epsilon * es.variance / y;
    if (scale == 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 / scale - (y + 2.0 - 2.0 * relative_index(es));
}

LocalVolPoint local_vol(const ErrorStructure<>& es, const MarketSpec<>& m, double strike,
                        double maturity) {
    const double variance = local_variance(es, m, strike, maturity);
    const auto local = rescale_maturity(es, m.maturity, maturity);
    const double margin = positivity_margin(local);
    // The at-the-money value is the minimum over strikes when Gamma > 0.
    const double tolerance = 1e-12 * std::max(1.0, 2.0 * local.value * local.value /
                                                       std::max(local.epsilon * local.variance,
                                                                std::numeric_limits<double>::min()));
    if (margin < -tolerance || variance < -1e-12 * m.sigma0 * m.sigma0) {
        throw PositivityError("local_vol: local variance is not positive (margin " +
                                  std::to_string(margin) + ")",
                              margin);
    }
    return {strike, maturity, variance};
}

DupireCheck dupire_check(const ErrorStructure<>& es, const MarketSpec<>& m, double strike,
                         double maturity, const DupireSteps& steps) {
    validate(m);
    validate(es);
    if (!(steps.maturity > 0.0 && steps.strike > 0.0)) {
        throw ArgumentError("dupire_check: finite-difference steps must be positive");
    }
    const double hT = steps.maturity * maturity;
    const double hK = steps.strike * strike;
    if (!(maturity - hT > 0.0)) throw ArgumentError("dupire_check: maturity too close to zero");

    auto c = [&](double k, double t) { return perturbed_price(es, m, k, t); };
    const double c0 = c(strike, maturity);
    const double dC_dT = (c(strike, maturity + hT) - c(strike, maturity - hT)) / (2.0 * hT);
    const double d2C_dK2 = (c(strike + hK, maturity) - 2.0 * c0 + c(strike - hK, maturity)) / (hK * hK);
    const double denominator = 0.5 * strike * strike * d2C_dK2;
    if (!(std::abs(denominator) >= 1e-14)) {
        throw NumericError("dupire_check: K^2/2 d2C/dK2 is below 1e-14");
    }

    DupireCheck out;
    out.ratio_variance = dC_dT / denominator;
    out.first_order_variance = local_variance(es, m, strike, maturity);
    out.relative_gap = (out.ratio_variance - out.first_order_variance) / out.first_order_variance;
    return out;
}

}  // namespace pbs
