#include "verify.hpp"

#include <algorithm>
#include <array>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <functional>

#include "pbs/errors.hpp"
#include "pbs/normal.hpp"
#include "pbs/random.hpp"
#include "pbs/simulator.hpp"

namespace pbs::verify {
namespace {

using Wide = boost::multiprecision::cpp_bin_float_50;

Check band(std::string suite, std::string name, const Estimate& e, double target) {
    const double tol = kStandardErrors * e.std_error;
    return {std::move(suite), std::move(name), e.value, e.std_error, target, tol,
            std::fabs(e.value - target) <= tol};
}

Check bound(std::string suite, std::string name, double value, double target, double tol) {
    return {std::move(suite), std::move(name), value, std::numeric_limits<double>::quiet_NaN(), target, tol,
            std::fabs(value - target) <= tol};
}

// The time value carries every greek below (the intrinsic part is linear away
// from the strike) and, unlike the price, keeps its digits deep in the money.
Wide wide_time_value(Wide x, Wide k, Wide t, Wide s) { return bs_time_value(MarketSpec<Wide>{x, k, t, s}); }

struct GreekErrors {
    double vega = 0.0;
    double vomma = 0.0;
    double vanna = 0.0;
    double dual_gamma = 0.0;
};

double rel(const Wide& fd, double exact) { return std::fabs(static_cast<double>(fd) / exact - 1.0); }

GreekErrors greek_errors(double spot, double strike, double maturity, double sigma) {
    const auto g = bs_greeks(MarketSpec<>{spot, strike, maturity, sigma});
    const Wide x(spot), k(strike), t(maturity), s(sigma);
    // With 50 digits, relative steps of 1e-10 leave truncation and rounding
    // far below the tolerance even in the deep wings.
    const Wide hs = s * Wide("1e-10");
    const Wide hx = x * Wide("1e-10");
    const Wide hk = k * Wide("1e-10");
    // At the money the intrinsic kink sits on the stencil; the price itself is smooth there.
    auto c = [&](Wide xx, Wide kk, Wide ss) {
        return spot == strike ? bs_price(MarketSpec<Wide>{xx, kk, t, ss}) : wide_time_value(xx, kk, t, ss);
    };

    const Wide c0 = c(x, k, s);
    const Wide vega = (c(x, k, s + hs) - c(x, k, s - hs)) / (2 * hs);
    const Wide vomma = (c(x, k, s + hs) - 2 * c0 + c(x, k, s - hs)) / (hs * hs);
    const Wide vanna =
        (c(x + hx, k, s + hs) - c(x + hx, k, s - hs) - c(x - hx, k, s + hs) + c(x - hx, k, s - hs)) / (4 * hx * hs);
    const Wide dual = (c(x, k + hk, s) - 2 * c0 + c(x, k - hk, s)) / (hk * hk);
    return {rel(vega, g.vega), rel(vomma, g.vomma), rel(vanna, g.vanna), rel(dual, g.dual_gamma)};
}

ErrorStructure<> unit_gamma(const Options& o) { return {o.market.sigma0, 0.0, 1.0, 1.0}; }

SimConfig sim_config(const Options& o) {
    SimConfig c;
    c.market = o.market;
    c.es = o.es;
    c.h = o.h;
    c.n_paths = o.n_paths;
    c.n_steps = o.n_steps;
    c.n_sigma_draws = o.n_draws;
    c.seed = o.seed;
    c.threads = o.threads;
    return c;
}

double lerp(double lo, double hi, double u) { return lo + (hi - lo) * u; }

}  // namespace

std::vector<Check> greeks(double rel_tol) {
    constexpr std::array<double, 5> kRatio{0.5, 0.7071067811865476, 1.0, 1.4142135623730951, 2.0};
    constexpr std::array<double, 5> kMaturity{0.1, 0.575, 1.05, 1.525, 2.0};
    constexpr std::array<double, 5> kSigma{0.1, 0.2, 0.3, 0.4, 0.5};
    const double spot = 100.0;
    GreekErrors worst;
    for (double r : kRatio) {
        for (double t : kMaturity) {
            for (double s : kSigma) {
                const auto e = greek_errors(spot, r * spot, t, s);
                worst.vega = std::max(worst.vega, e.vega);
                worst.vomma = std::max(worst.vomma, e.vomma);
                worst.vanna = std::max(worst.vanna, e.vanna);
                worst.dual_gamma = std::max(worst.dual_gamma, e.dual_gamma);
            }
        }
    }
    return {bound("greeks", "vega max rel err", worst.vega, 0.0, rel_tol),
            bound("greeks", "vomma max rel err", worst.vomma, 0.0, rel_tol),
            bound("greeks", "vanna max rel err", worst.vanna, 0.0, rel_tol),
            bound("greeks", "dual_gamma max rel err", worst.dual_gamma, 0.0, rel_tol)};
}

std::vector<Check> theorem41(const Options& o) {
    const auto r = simulate_pnl(sim_config(o));
    const auto pm = pnl_moments(o.es, o.market, o.h);
    const double eps = o.es.epsilon;
    return {band("theorem41", "bias", r.bias_est, eps * pm.bias),
            band("theorem41", "variance", r.variance_est, eps * pm.variance)};
}

std::vector<Check> upsilon2(const Options& o) {
    std::vector<Check> out;
    const std::array<double, 2> maturities{o.market.maturity, 0.01};
    for (double t : maturities) {
        auto c = sim_config(o);
        c.market.maturity = t;
        c.es = unit_gamma(o);
        c.n_paths = std::max(o.n_paths, 200000);
        const auto mc = estimate_upsilon2(c);
        const double quad = pnl_moments(c.es, c.market, HFunction{}).upsilon2;
        out.push_back(band("upsilon2", "T=" + std::to_string(t), mc, quad));
    }
    return out;
}

std::vector<Check> quote(const Options& o) {
    // Symmetry over random configurations.
    double worst = 0.0;
    for (std::uint32_t i = 0; i < 1000; ++i) {
        auto u = [&](std::uint32_t k) { return uniform(o.seed, {i, k, 0, 11}); };
        const double spot = lerp(50.0, 150.0, u(0));
        const MarketSpec<> m{spot, spot * std::exp(lerp(std::log(0.5), std::log(2.0), u(1))), lerp(0.1, 2.0, u(2)),
                             lerp(0.1, 0.5, u(3))};
        const double gamma = lerp(0.0, 0.1, u(4)) * m.sigma0 * m.sigma0;
        const ErrorStructure<> es{m.sigma0, lerp(-1.0, 1.0, u(5)) * gamma, gamma, lerp(0.0, 0.05, u(6))};
        const HFunction h{lerp(0.5, 2.0, u(7)), lerp(-1.0, 1.0, u(8))};
        const auto q = pbs::quote(es, m, h, lerp(0.01, 0.49, u(9)));
        worst = std::max(worst, std::fabs(q.bid + q.ask - 2.0 * q.mid) / std::max(1.0, std::fabs(q.mid)));
    }
    std::vector<Check> out{bound("quote", "max |bid+ask-2mid|", worst, 0.0, 1e-12)};

    // Spread against the quantiles of the price under the perturbed sigma.
    const auto q = pbs::quote(o.es, o.market, HFunction{}, o.alpha);
    const int n = 200000;
    std::vector<double> prices(n);
    for (int j = 0; j < n; ++j) {
        const double z = normal_pair(o.seed, {static_cast<std::uint32_t>(j), 0, 0, 12}).first;
        auto m = o.market;
        m.sigma0 = perturbed_sample(o.es, z);
        prices[static_cast<std::size_t>(j)] = bs_price(m);
    }
    auto quantile = [&](double p) {
        const auto k = static_cast<std::size_t>(std::floor(p * (n - 1)));
        std::nth_element(prices.begin(), prices.begin() + static_cast<std::ptrdiff_t>(k), prices.end());
        return prices[k];
    };
    const double spread = quantile(1.0 - o.alpha) - quantile(o.alpha);
    // Order-statistic error sqrt(p(1-p)/n) / density, density from the
    // first-order Gaussian law; the two tails are counted separately.
    const double sd = std::sqrt(o.es.epsilon * pnl_moments(o.es, o.market, HFunction{}).variance);
    const double density = normal_pdf(normal_quantile(o.alpha)) / sd;
    const double se_q = std::sqrt(o.alpha * (1.0 - o.alpha) / n) / density;
    out.push_back(band("quote", "spread vs MC quantiles", {spread, 2.0 * se_q}, q.spread()));
    return out;
}

std::vector<Check> lemma(const Options& o) {
    const double s0 = o.market.sigma0;
    const DiffusionSpec<> gbm{[s0](double x) { return s0 * x; }, [](double) { return 0.0; }, o.market.spot};
    const SmoothFunctionProbe<> identity{[](double x) { return x; }, [](double) { return 1.0; },
                                         [](double) { return 0.0; }};
    const std::array<double, 3> grid{0.1, 0.05, 0.025};
    LemmaConfig cfg;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    const auto rows = lemma_small_t_check(gbm, identity, grid, cfg);

    std::vector<Check> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& a = rows[i - 1].statistic;
        const auto& b = rows[i].statistic;
        const double slack = kStandardErrors * std::hypot(a.std_error, b.std_error);
        Check c{"lemma", "t=" + std::to_string(rows[i].t) + " below t=" + std::to_string(rows[i - 1].t), b.value,
                std::hypot(a.std_error, b.std_error), a.value, slack, b.value <= a.value + slack};
        out.push_back(c);
    }
    out.push_back(Check{"lemma", "last below half of first", rows.back().statistic.value,
                        rows.back().statistic.std_error, 0.5 * rows.front().statistic.value,
                        std::numeric_limits<double>::quiet_NaN(),
                        rows.back().statistic.value < 0.5 * rows.front().statistic.value});
    return out;
}

std::vector<std::string> suite_names() { return {"greeks", "theorem41", "upsilon2", "quote", "lemma"}; }

std::vector<Check> run_suite(const std::string& name, const Options& o) {
    if (name == "greeks") return greeks();
    if (name == "theorem41") return theorem41(o);
    if (name == "upsilon2") return upsilon2(o);
    if (name == "quote") return quote(o);
    if (name == "lemma") return lemma(o);
    if (name == "all") {
        std::vector<Check> out;
        for (const auto& s : suite_names()) {
            auto part = run_suite(s, o);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    throw ArgumentError("verify: unknown suite '" + name + "'");
}

}  // namespace pbs::verify
