#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pbs/black_scholes.hpp"
#include "pbs/error_calculus.hpp"
#include "pbs/random.hpp"

namespace {

using pbs::ErrorStructure;
using pbs::MultiErrorStructure;
using pbs::SmoothFunctionProbe;

SmoothFunctionProbe<> identity() {
    return {[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
}

SmoothFunctionProbe<> square() {
    return {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }, [](double) { return 2.0; }};
}

SmoothFunctionProbe<> premium_in_sigma(double spot, double strike, double maturity) {
    auto g = [=](double s) { return pbs::bs_greeks(pbs::MarketSpec<>{spot, strike, maturity, s}); };
    return {[g](double s) { return g(s).premium; }, [g](double s) { return g(s).vega; },
            [g](double s) { return g(s).vomma; }};
}

TEST(Propagate, IdentityKeepsStructure) {
    const ErrorStructure<> es{0.2, 0.1, 0.04, 0.01};
    const auto out = pbs::propagate_scalar(identity(), es);
    EXPECT_DOUBLE_EQ(out.value, 0.2);
    EXPECT_DOUBLE_EQ(out.bias, 0.1);
    EXPECT_DOUBLE_EQ(out.variance, 0.04);
    EXPECT_DOUBLE_EQ(out.epsilon, 0.01);
}

TEST(Propagate, ConvexityAloneCreatesBias) {
    const auto out = pbs::propagate_scalar(square(), ErrorStructure<>{1.0, 0.0, 1.0, 0.3});
    EXPECT_DOUBLE_EQ(out.bias, 1.0);
    EXPECT_DOUBLE_EQ(out.variance, 4.0);
}

TEST(Propagate, PremiumMatchesFiniteDifferences) {
    const auto probe = premium_in_sigma(100.0, 100.0, 1.0);
    const ErrorStructure<> es{0.2, 0.0, 0.04, 0.01};
    const auto out = pbs::propagate_scalar(probe, es);

    // Fourth-order central differences of the premium in sigma.
    const double h = 1e-3;
    auto c = [&](double s) { return probe.f(s); };
    const double d1 = (-c(0.2 + 2 * h) + 8 * c(0.2 + h) - 8 * c(0.2 - h) + c(0.2 - 2 * h)) / (12 * h);
    const double d2 =
        (-c(0.2 + 2 * h) + 16 * c(0.2 + h) - 30 * c(0.2) + 16 * c(0.2 - h) - c(0.2 - 2 * h)) / (12 * h * h);
    EXPECT_NEAR(out.bias / (0.5 * d2 * 0.04), 1.0, 1e-5);
    EXPECT_NEAR(out.variance / (d1 * d1 * 0.04), 1.0, 1e-5);
}

TEST(Propagate, NonFiniteDerivativeIsDomainError) {
    const SmoothFunctionProbe<> bad{[](double x) { return std::sqrt(x); }, [](double x) { return 0.5 / std::sqrt(x); },
                                    [](double x) { return -0.25 / (x * std::sqrt(x)); }};
    EXPECT_THROW(pbs::propagate_scalar(bad, ErrorStructure<>{0.0, 0.0, 1.0, 1.0}), pbs::DomainError);
}

TEST(Propagate, RejectsInvalidStructures) {
    EXPECT_THROW(pbs::propagate_scalar(identity(), ErrorStructure<>{1.0, 0.0, -1.0, 1.0}), pbs::ArgumentError);
    EXPECT_THROW(pbs::propagate_scalar(identity(), ErrorStructure<>{1.0, NAN, 1.0, 1.0}), pbs::ArgumentError);
    EXPECT_THROW(pbs::propagate_scalar(identity(), ErrorStructure<>{1.0, 0.0, 1.0, -0.1}), pbs::ArgumentError);
}

TEST(PropagateProperty, BiasAffineInBiasAndVariance) {
    const auto probe = premium_in_sigma(110.0, 100.0, 0.5);
    const double s0 = 0.3;
    const double f1 = probe.f1(s0);
    const double f2 = probe.f2(s0);
    for (double a : {-0.5, 0.0, 0.7}) {
        for (double g : {0.0, 0.01, 0.2}) {
            const auto out = pbs::propagate_scalar(probe, ErrorStructure<>{s0, a, g, 0.01});
            EXPECT_NEAR(out.bias, f1 * a + 0.5 * f2 * g, 1e-12 * (1.0 + std::fabs(out.bias)));
            EXPECT_NEAR(out.variance, f1 * f1 * g, 1e-12 * (1.0 + out.variance));
        }
    }
}

TEST(PropagateProperty, LinearScalingIsExact) {
    for (double c : {-3.0, 0.5, 7.0}) {
        const SmoothFunctionProbe<> lin{[c](double x) { return c * x; }, [c](double) { return c; },
                                        [](double) { return 0.0; }};
        const auto out = pbs::propagate_scalar(lin, ErrorStructure<>{1.5, 0.25, 0.4, 1.0});
        EXPECT_EQ(out.bias, c * 0.25);
        EXPECT_EQ(out.variance, c * c * 0.4);
    }
}

// Second-order Taylor expectation by Monte Carlo: X = x0 + eps A + sqrt(eps G) N,
// E[F(X) - F(x0)] / eps -> bias and Var[F(X)] / eps -> variance.
TEST(PropagateProperty, AgreesWithTaylorMonteCarlo) {
    const SmoothFunctionProbe<> f{[](double x) { return std::exp(x); }, [](double x) { return std::exp(x); },
                                  [](double x) { return std::exp(x); }};
    const ErrorStructure<> es{0.3, 0.4, 0.5, 1.0};
    const auto out = pbs::propagate_scalar(f, es);
    const int n = 400000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = pbs::normal_pair(3, {static_cast<std::uint32_t>(i), 0, 0, 0}).first;
        const double dx = es.bias * 1.0 + std::sqrt(es.variance) * z;
        const double t = f.f1(es.value) * dx + 0.5 * f.f2(es.value) * dx * dx;
        sum += t;
        sq += t * t;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    // Taylor mean = f'A + f''/2 (A^2 + G); with eps = 1 the A^2 term is second order.
    const double expected = out.bias + 0.5 * f.f2(es.value) * es.bias * es.bias;
    EXPECT_NEAR(mean, expected, 3.0 * std::sqrt(var / n));
}

TEST(PropagateMulti, ReducesToScalarInOneDimension) {
    using V = MultiErrorStructure<>::Vector;
    using M = MultiErrorStructure<>::Matrix;
    const auto p = square();
    pbs::MultiFunctionProbe<> mp{1, [p](const V& x) { return p.f(x(0)); },
                                 [p](const V& x) { return V::Constant(1, p.f1(x(0))); },
                                 [p](const V& x) { return M::Constant(1, 1, p.f2(x(0))); }};
    for (double x : {-1.0, 0.3, 2.0}) {
        MultiErrorStructure<> es{V::Constant(1, x), V::Constant(1, 0.2), M::Constant(1, 1, 0.7), 0.05};
        const auto a = pbs::propagate_multi(mp, es);
        const auto b = pbs::propagate_scalar(p, ErrorStructure<>{x, 0.2, 0.7, 0.05});
        EXPECT_DOUBLE_EQ(a.value, b.value);
        EXPECT_DOUBLE_EQ(a.bias, b.bias);
        EXPECT_DOUBLE_EQ(a.variance, b.variance);
        EXPECT_DOUBLE_EQ(a.epsilon, b.epsilon);
    }
}

pbs::MultiFunctionProbe<> sum_probe() {
    using V = MultiErrorStructure<>::Vector;
    using M = MultiErrorStructure<>::Matrix;
    return {2, [](const V& x) { return x.sum(); }, [](const V&) { return V::Ones(2).eval(); },
            [](const V&) { return M::Zero(2, 2).eval(); }};
}

pbs::MultiFunctionProbe<> product_probe() {
    using V = MultiErrorStructure<>::Vector;
    using M = MultiErrorStructure<>::Matrix;
    return {2, [](const V& x) { return x(0) * x(1); }, [](const V& x) { return V{{x(1), x(0)}}; },
            [](const V&) { return M{{0.0, 1.0}, {1.0, 0.0}}; }};
}

TEST(PropagateMulti, LinearSum) {
    using V = MultiErrorStructure<>::Vector;
    using M = MultiErrorStructure<>::Matrix;
    MultiErrorStructure<> es{V{{1.0, 2.0}}, V{{0.3, -0.1}}, M::Identity(2, 2), 0.01};
    const auto out = pbs::propagate_multi(sum_probe(), es);
    EXPECT_DOUBLE_EQ(out.bias, 0.2);
    EXPECT_DOUBLE_EQ(out.variance, 2.0);
}

TEST(PropagateMulti, CorrelatedProduct) {
    using V = MultiErrorStructure<>::Vector;
    using M = MultiErrorStructure<>::Matrix;
    const double rho = 0.5;
    MultiErrorStructure<> es{V{{1.0, 1.0}}, V::Zero(2), M{{1.0, rho}, {rho, 1.0}}, 1.0};
    const auto out = pbs::propagate_multi(product_probe(), es);
    EXPECT_DOUBLE_EQ(out.bias, 0.5);
    EXPECT_DOUBLE_EQ(out.variance, 3.0);

    // Second-order Taylor expectation of x*y over correlated Gaussian pairs.
    const int n = 1000000;
    double sb = 0.0, sbb = 0.0, sv = 0.0, svv = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto [z0, z1] = pbs::normal_pair(11, {static_cast<std::uint32_t>(i), 0, 0, 0});
        const double dx = z0;
        const double dy = rho * z0 + std::sqrt(1 - rho * rho) * z1;
        const double quad = dx * dy;        // Hessian term: bias sample
        const double lin = dx + dy;         // gradient term: variance sample
        sb += quad;
        sbb += quad * quad;
        sv += lin * lin;
        svv += lin * lin * lin * lin;
    }
    const double mb = sb / n, mv = sv / n;
    EXPECT_NEAR(mb, out.bias, 3.0 * std::sqrt((sbb / n - mb * mb) / n));
    EXPECT_NEAR(mv, out.variance, 3.0 * std::sqrt((svv / n - mv * mv) / n));
}

TEST(PropagateMulti, SeparableDiagonalEqualsSumOfScalars) {
    using V = MultiErrorStructure<>::Vector;
    using M = MultiErrorStructure<>::Matrix;
    pbs::MultiFunctionProbe<> f{2, [](const V& x) { return x(0) * x(0) + std::exp(x(1)); },
                                [](const V& x) { return V{{2 * x(0), std::exp(x(1))}}; },
                                [](const V& x) { return M{{2.0, 0.0}, {0.0, std::exp(x(1))}}; }};
    MultiErrorStructure<> es{V{{0.7, -0.2}}, V{{0.1, 0.3}}, M{{0.5, 0.0}, {0.0, 0.25}}, 0.02};
    const auto out = pbs::propagate_multi(f, es);
    const auto a = pbs::propagate_scalar(square(), ErrorStructure<>{0.7, 0.1, 0.5, 0.02});
    const SmoothFunctionProbe<> ex{[](double x) { return std::exp(x); }, [](double x) { return std::exp(x); },
                                   [](double x) { return std::exp(x); }};
    const auto b = pbs::propagate_scalar(ex, ErrorStructure<>{-0.2, 0.3, 0.25, 0.02});
    EXPECT_NEAR(out.bias, a.bias + b.bias, 1e-14);
    EXPECT_NEAR(out.variance, a.variance + b.variance, 1e-14);
}

TEST(PropagateMulti, Validation) {
    using V = MultiErrorStructure<>::Vector;
    using M = MultiErrorStructure<>::Matrix;
    MultiErrorStructure<> three{V::Zero(3), V::Zero(3), M::Identity(3, 3), 1.0};
    EXPECT_THROW(pbs::propagate_multi(sum_probe(), three), pbs::ArgumentError);

    MultiErrorStructure<> asym{V::Zero(2), V::Zero(2), M{{1.0, 0.5}, {0.4, 1.0}}, 1.0};
    EXPECT_THROW(pbs::validate(asym), pbs::ArgumentError);

    MultiErrorStructure<> indefinite{V::Zero(2), V::Zero(2), M{{1.0, 2.0}, {2.0, 1.0}}, 1.0};
    EXPECT_THROW(pbs::validate(indefinite), pbs::ArgumentError);

    MultiErrorStructure<> tiny_negative{V::Zero(2), V::Zero(2), M{{1.0, 0.0}, {0.0, -1e-13}}, 1.0};
    EXPECT_NO_THROW(pbs::validate(tiny_negative));
}

TEST(Diffusion, BrownianIdentity) {
    const pbs::DiffusionSpec<> bm{[](double) { return 1.0; }, [](double) { return 0.0; }, 3.0};
    const auto m = pbs::diffusion_perturbation(bm, identity());
    EXPECT_EQ(m.bias, 0.0);
    EXPECT_EQ(m.variance, 1.0);
}

TEST(Diffusion, LogOfGeometricBrownian) {
    const pbs::DiffusionSpec<> gbm{[](double x) { return x; }, [](double) { return 0.0; }, 1.0};
    const SmoothFunctionProbe<> lg{[](double x) { return std::log(x); }, [](double x) { return 1.0 / x; },
                                   [](double x) { return -1.0 / (x * x); }};
    const auto m = pbs::diffusion_perturbation(gbm, lg);
    EXPECT_DOUBLE_EQ(m.bias, -0.5);
    EXPECT_DOUBLE_EQ(m.variance, 1.0);

    // E[log X_t] / t = -1/2 and Var[log X_t] / t = 1 for exact GBM at t = 1e-3.
    const double t = 1e-3;
    const int n = 200000;
    double s = 0.0, q = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = pbs::normal_pair(5, {static_cast<std::uint32_t>(i), 0, 0, 0}).first;
        const double v = std::log(1.0 * std::exp(-0.5 * t + std::sqrt(t) * z)) / t;  // log X_t, X_0 = 1
        s += v;
        q += v * v;
    }
    const double mean = s / n;
    const double var = q / n - mean * mean;
    EXPECT_NEAR(mean, m.bias, 3.0 * std::sqrt(var / n));
    EXPECT_NEAR(var * t, m.variance, 0.01);
}

TEST(Diffusion, EqualsPropagationWithGeneratorAndCarre) {
    const double s0 = 0.25, x0 = 105.0;
    const pbs::DiffusionSpec<> gbm{[s0](double x) { return s0 * x; }, [](double) { return 0.0; }, x0};
    auto g = [](double x) { return pbs::bs_greeks(pbs::MarketSpec<>{x, 100.0, 0.75, 0.25}); };
    const SmoothFunctionProbe<> premium{
        [g](double x) { return g(x).premium; }, [g](double x) { return g(x).delta; },
        [](double x) { return pbs::normal_pdf(pbs::d_terms(pbs::MarketSpec<>{x, 100.0, 0.75, 0.25}).d1) /
                               (x * 0.25 * std::sqrt(0.75)); }};
    const auto d = pbs::diffusion_perturbation(gbm, premium);
    const auto p = pbs::propagate_scalar(premium, ErrorStructure<>{x0, 0.0, s0 * s0 * x0 * x0, 1.0});
    EXPECT_DOUBLE_EQ(d.bias, p.bias);
    EXPECT_DOUBLE_EQ(d.variance, p.variance);
}

TEST(PerturbedSample, Points) {
    const ErrorStructure<> es{0.2, 0.1, 0.04, 0.01};
    EXPECT_NEAR(pbs::perturbed_sample(es, 0.0), 0.201, 1e-15);
    EXPECT_NEAR(pbs::perturbed_sample(es, 1.0), 0.221, 1e-15);
}

TEST(PerturbedSample, LawOfLargeNumbers) {
    const ErrorStructure<> es{0.2, 0.1, 0.04, 0.01};
    const int n = 1000000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        s += pbs::perturbed_sample(es, pbs::normal_pair(9, {static_cast<std::uint32_t>(i), 0, 0, 0}).first);
    }
    EXPECT_NEAR(s / n, 0.201, 3.0 * 0.02 / 1000.0);
}

TEST(FiniteDifferenceProbe, RecoversDerivatives) {
    const auto fd = pbs::finite_difference_probe<double>([](double x) { return std::sin(x); });
    for (double x : {-2.0, 0.0, 0.5, 3.0}) {
        EXPECT_NEAR(fd.f1(x), std::cos(x), 1e-9);
        EXPECT_NEAR(fd.f2(x), -std::sin(x), 1e-6);
    }
}

TEST(FiniteDifferenceProbe, InconsistencyDetectsWrongDerivative) {
    const std::vector<double> pts{0.1, 0.5, 1.0, 2.0};
    const auto good = premium_in_sigma(100.0, 110.0, 1.0);
    EXPECT_LE(pbs::probe_inconsistency<double>(good, pts), 1e-5);
    auto bad = good;
    bad.f2 = [](double) { return 0.0; };
    EXPECT_GT(pbs::probe_inconsistency<double>(bad, pts), 1e-2);
}

}  // namespace
