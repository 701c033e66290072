#include "pbs/pricing.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pbs/normal.hpp"
#include "pbs/quadrature.hpp"

namespace pbs {
namespace {

constexpr double kInvSqrt2Pi = std::numbers::inv_sqrtpi / std::numbers::sqrt2;

void require_reference(const ErrorStructure<>& es, double expected, const char* who,
                       const char* what) {
    if (std::abs(es.value - expected) > 1e-12 * std::max(1.0, std::abs(expected))) {
        throw ArgumentError(std::string(who) + ": error structure must sit at " + what + " (" +
                            std::to_string(expected) + "), got " + std::to_string(es.value));
    }
}

bool at_the_money(const MarketSpec<>& m) {
    return std::abs(m.strike - m.spot) <= 1e-12 * m.spot;
}

// Bias and variance of the cumulated volatility at maturity m.maturity, given
// the per-unit-sigma densities held fixed across maturities.
struct CumulatedDensities {
    double a;
    double g;
};

CumulatedDensities at_maturity(double a_sigma, double g_sigma, double maturity) {
    return {std::sqrt(maturity) * a_sigma, maturity * g_sigma};
}

double call_bias_raw(double a, double g, const MarketSpec<>& m) {
    const auto [d1, d2] = d_terms(m);
    const double v = m.cumulated_vol();
    return m.spot * normal_pdf(d1) * (a + d1 * d2 / (2.0 * v) * g);
}

double maturity_derivative_raw(double a_sigma, double g_sigma, const MarketSpec<>& m) {
    const auto [a, g] = at_maturity(a_sigma, g_sigma, m.maturity);
    const auto [d1, d2] = d_terms(m);
    const double v = m.cumulated_vol();
    const double y = v * v;
    const double s = d1 + d2;
    return m.spot / (2.0 * m.maturity) * normal_pdf(d1) *
           ((1.0 + d1 * d2) * a + (4.0 * d1 * d1 * d2 * d2 - 3.0 * y - s * s) / (8.0 * v) * g);
}

bool near(double r, double bound) {
    return std::abs(r - bound) <= kBoundaryTolerance * std::max(1.0, std::abs(bound));
}

}  // namespace

void validate(const HFunction& h) {
    if (!std::isfinite(h.h1) || !std::isfinite(h.h2) || h.h1 == 0.0) {
        throw ArgumentError("h-function: h'(0) must be non-zero and both derivatives finite");
    }
}

ErrorStructure<> to_cumulated_vol(const ErrorStructure<>& on_sigma, double maturity) {
    validate(on_sigma);
    if (!(maturity > 0.0)) throw ArgumentError("to_cumulated_vol: maturity must be positive");
    const double root = std::sqrt(maturity);
    return {on_sigma.value * root, on_sigma.bias * root, on_sigma.variance * maturity,
            on_sigma.epsilon};
}

ErrorStructure<> to_volatility(const ErrorStructure<>& on_cumulated, double maturity) {
    validate(on_cumulated);
    if (!(maturity > 0.0)) throw ArgumentError("to_volatility: maturity must be positive");
    const double root = std::sqrt(maturity);
    return {on_cumulated.value / root, on_cumulated.bias / root, on_cumulated.variance / maturity,
            on_cumulated.epsilon};
}

ErrorStructure<> rescale_maturity(const ErrorStructure<>& on_cumulated, double from_maturity,
                                  double to_maturity) {
    return to_cumulated_vol(to_volatility(on_cumulated, from_maturity), to_maturity);
}

ErrorStructure<> with_relative_index(double value, double relative_index, double variance,
                                     double epsilon) {
    if (!(value != 0.0)) throw DomainError("with_relative_index: reference value must be non-zero");
    ErrorStructure<> es{value, relative_index * variance / (2.0 * value), variance, epsilon};
    validate(es);
    return es;
}

double relative_index(const ErrorStructure<>& es) {
    validate(es);
    if (!(es.variance > 0.0)) throw DomainError("relative_index: variance must be positive");
    return 2.0 * es.value * es.bias / es.variance;
}

double spot_vanna_moment(const MarketSpec<>& m, double t) {
    validate(m);
    const double T = m.maturity;
    if (!(t >= 0.0 && t <= T)) throw ArgumentError("spot_vanna_moment: t must lie in [0, T]");
    const double tau = T - t;
    if (tau == 0.0) return 0.0;

    // S^2 vanna^2 = K^2 d2^2 exp(-d2^2) / (2 pi sigma0^2), and d2 is Gaussian
    // under the true law of S_t; the expectation is a Gaussian integral.
    const double s2 = m.sigma0 * m.sigma0;
    const double c = std::log(m.spot / m.strike) - 0.5 * s2 * T;
    const double q = tau / (2.0 * T - tau);                // 1 / (1 + 2 t / tau)
    const double mu2q = c * c / (s2 * (2.0 * T - tau));    // mean(d2)^2 q
    const double eta2q = t / (2.0 * T - tau);              // var(d2) q
    const double gauss = std::sqrt(q) * std::exp(-mu2q) * (mu2q * q + eta2q);
    return m.strike * m.strike / (2.0 * std::numbers::pi * s2) * gauss;
}

double spot_vanna_integral(const MarketSpec<>& m, int n_quad) {
    validate(m);
    if (n_quad < 1) throw ArgumentError("spot_vanna_integral: n_quad must be positive");
    // tau = T u^2 makes the integrand analytic in u on [0, 1].
    const auto rule = gauss_legendre(n_quad);
    const double T = m.maturity;
    return integrate(
        rule,
        [&](double u) { return 2.0 * T * u * spot_vanna_moment(m, T * (1.0 - u * u)); }, 0.0, 1.0);
}

PnLMoments pnl_moments(const ErrorStructure<>& es, const MarketSpec<>& m, const HFunction& h,
                       int n_quad) {
    validate(m);
    validate(es);
    validate(h);
    if (n_quad < 16) throw ArgumentError("pnl_moments: n_quad must be at least 16");
    require_reference(es, m.sigma0, "pnl_moments", "sigma0");

    const auto g = bs_greeks(m);
    PnLMoments out;
    out.upsilon1 = g.vega * es.bias + 0.5 * g.vomma * es.variance;
    out.lambda = g.vega * g.vega * es.variance;
    const double integral = es.variance > 0.0 ? spot_vanna_integral(m, n_quad) : 0.0;
    out.upsilon2 = (g.vega * g.vega + m.sigma0 * m.sigma0 * integral) * es.variance;
    out.bias = h.h1 * out.upsilon1 + 0.5 * h.h2 * out.upsilon2;
    out.variance = h.h1 * h.h1 * out.lambda;
    return out;
}

Quote quote(const ErrorStructure<>& es, const MarketSpec<>& m, const HFunction& h, double alpha,
            int n_quad) {
    if (!(alpha > 0.0 && alpha < 0.5)) throw ArgumentError("quote: alpha must lie in (0, 0.5)");
    const auto moments = pnl_moments(es, m, h, n_quad);
    Quote q;
    q.alpha = alpha;
    q.mid = bs_price(m) + es.epsilon * moments.bias;
    // N_alpha = -N_{1-alpha}: the quote is symmetric about mid by construction.
    const double half_width = std::sqrt(es.epsilon * moments.variance) * -normal_quantile(alpha);
    q.bid = q.mid - half_width;
    q.ask = q.mid + half_width;
    return q;
}

double call_bias(const ErrorStructure<>& es, const MarketSpec<>& m) {
    validate(m);
    validate(es);
    require_reference(es, m.cumulated_vol(), "call_bias", "sigma0 sqrt(T)");
    return call_bias_raw(es.bias, es.variance, m);
}

StrikeDerivatives bias_strike_derivs(const ErrorStructure<>& es, const MarketSpec<>& m) {
    const double bias = call_bias(es, m);
    const auto [d1, d2] = d_terms(m);
    const double v = m.cumulated_vol();
    const double K = m.strike;
    const double pdf = normal_pdf(d1);
    const double a = es.bias;
    const double g = es.variance;

    StrikeDerivatives out;
    out.dA_dK = d1 * bias / (K * v) - m.spot / (2.0 * K * v * v) * pdf * (d1 + d2) * g;
    out.d2A_dK2 = d2 / (K * v) * out.dA_dK -
                  m.spot / (K * K * v * v) * pdf * (a + (d1 * d1 + 2.0 * d1 * d2 - 2.0) / (2.0 * v) * g);
    return out;
}

MaturityDerivatives bias_maturity_derivs(const ErrorStructure<>& es, const MarketSpec<>& m) {
    validate(m);
    validate(es);
    require_reference(es, m.cumulated_vol(), "bias_maturity_derivs", "sigma0 sqrt(T)");
    const double T = m.maturity;
    const double a_sigma = es.bias / std::sqrt(T);
    const double g_sigma = es.variance / T;

    MaturityDerivatives out;
    out.dA_dT = maturity_derivative_raw(a_sigma, g_sigma, m);

    if (at_the_money(m)) {
        const double v = m.cumulated_vol();
        const double y = v * v;
        const double a = es.bias;
        const double g = es.variance;
        const double e = std::exp(-y / 8.0) * kInvSqrt2Pi;
        out.d2A_dKdT = -e / (16.0 * T) * ((y - 4.0) * a - v * (y - 12.0) / 8.0 * g);
        out.d3A_dK2dT = e / (m.spot * y * T) *
                        ((16.0 + y * y) / 32.0 * a - (y * (y - 4.0) * (y - 4.0) + 128.0) / 256.0 * g / v);
        return out;
    }

    // Fourth-order central differences in K of the closed-form dA/dT.
    const double h = 2e-3 * m.strike * std::min(1.0, m.cumulated_vol());
    auto f = [&](double k) {
        MarketSpec<> shifted = m;
        shifted.strike = k;
        return maturity_derivative_raw(a_sigma, g_sigma, shifted);
    };
    const double K = m.strike;
    const double fp2 = f(K + 2.0 * h), fp1 = f(K + h), fm1 = f(K - h), fm2 = f(K - 2.0 * h);
    out.d2A_dKdT = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
    out.d3A_dK2dT = (-fp2 + 16.0 * fp1 - 30.0 * out.dA_dT + 16.0 * fm1 - fm2) / (12.0 * h * h);
    return out;
}

double slope_time_bound(double y) {
    if (y == 4.0) return std::numeric_limits<double>::quiet_NaN();
    return 0.25 * y * (12.0 - y) / (4.0 - y);
}

SmileConditionReport smile_conditions(const ErrorStructure<>& es, const MarketSpec<>& m) {
    validate(m);
    const double r = relative_index(es);
    MarketSpec<> atm = m;
    atm.strike = m.spot;
    const double y = m.total_variance();

    SmileConditionReport rep;
    rep.relative_index = r;
    rep.atm_bias = call_bias(es, atm);
    rep.thresholds = {bias_sign_bound(y), convexity_bound(y), slope_time_bound(y),
                      smile_time_bound(y)};
    const auto& t = rep.thresholds;

    rep.on_boundary.bias = near(r, t.bias);
    rep.on_boundary.convexity = near(r, t.convexity);
    rep.on_boundary.smile_time = near(r, t.smile_time);
    rep.atm_bias_positive = r > t.bias && !rep.on_boundary.bias;
    rep.atm_convex = r < t.convexity && !rep.on_boundary.convexity;
    rep.smile_increases_with_T = r > t.smile_time && !rep.on_boundary.smile_time;

    if (std::isnan(t.slope_time)) {
        // y = 4: d2A/dKdT at the money is -sigma0 sqrt(T) Gamma e^{-1/2} / (16 T sqrt(2 pi)).
        rep.slope_increases_with_T = false;
    } else {
        rep.on_boundary.slope_time = near(r, t.slope_time);
        rep.slope_bound_is_upper = y > 4.0;
        const bool beyond = rep.slope_bound_is_upper ? r < t.slope_time : r > t.slope_time;
        rep.slope_increases_with_T = beyond && !rep.on_boundary.slope_time;
    }
    return rep;
}

}  // namespace pbs
