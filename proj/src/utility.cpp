#include "pbs/utility.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <memory>
#include <numbers>

#include "pbs/errors.hpp"
#include "pbs/normal.hpp"

namespace pbs {
namespace {

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("utility: non-finite ") + what);
    return v;
}

double parse_number(const std::string& text, const std::string& spec) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || !std::isfinite(v)) throw ArgumentError("utility: bad parameter in '" + spec + "'");
    return v;
}

double integrate(const std::function<double(double)>& f, double a, double b) {
    if (a == b) return 0.0;
    using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double sign = a < b ? 1.0 : -1.0;
    const double v = Rule::integrate(f, std::min(a, b), std::max(a, b), 20, kUtilityQuadratureTolerance);
    return sign * checked(v, "quadrature");
}

}  // namespace

AversionReport aversion_indices(const UtilityProbe& u, double x, double sigma2) {
    if (!u.u1 || !u.u2) throw ArgumentError("utility: probe needs u' and u''");
    if (!std::isfinite(x) || !std::isfinite(sigma2)) throw ArgumentError("utility: x and sigma2 must be finite");
    const double d1 = checked(u.u1(x), "u'");
    const double d2 = checked(u.u2(x), "u''");
    if (d1 == 0.0) throw DomainError("utility: u' vanishes; aversion undefined");
    const double r_a = -d2 / d1;
    return {0.5 * sigma2 * r_a, r_a, x * r_a};
}

HypothesisStarResult hypothesis_star_check(const UtilityProbe& u, const ErrorStructure<>& es) {
    validate(es);
    if (!u.u || !u.u1 || !u.u2) throw ArgumentError("utility: probe needs u, u' and u''");
    if (checked(u.u1(es.value), "u'") == 0.0) throw DomainError("utility: u' vanishes; aversion undefined");
    const auto image = propagate_scalar(u.as_probe(), es);
    const double scale = std::fabs(u.u1(es.value) * es.bias);
    return {image.bias, std::fabs(image.bias) <= 1e-12 * scale + 1e-12};
}

double neutral_bias(const UtilityProbe& u, double x, double variance) {
    return 0.5 * aversion_indices(u, x, 0.0).r_a * variance;
}

namespace utilities {

UtilityProbe linear() {
    return {[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
}

UtilityProbe normal_half() {
    // u' = phi(x/2)/2, u'' = -(x/4) u'.
    return {[](double x) { return normal_cdf(0.5 * x); }, [](double x) { return 0.5 * normal_pdf(0.5 * x); },
            [](double x) { return -0.125 * x * normal_pdf(0.5 * x); }};
}

UtilityProbe cara(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ArgumentError("utility: cara needs a > 0");
    return {[a](double x) { return -std::exp(-a * x) / a; }, [a](double x) { return std::exp(-a * x); },
            [a](double x) { return -a * std::exp(-a * x); }};
}

UtilityProbe crra(double c) {
    if (!std::isfinite(c)) throw ArgumentError("utility: crra needs finite c");
    auto need_positive = [](double x) {
        if (!(x > 0.0)) throw DomainError("utility: crra defined for positive wealth only");
    };
    return {[c, need_positive](double x) {
                need_positive(x);
                return c == 1.0 ? std::log(x) : (std::pow(x, 1.0 - c) - 1.0) / (1.0 - c);
            },
            [c, need_positive](double x) {
                need_positive(x);
                return std::pow(x, -c);
            },
            [c, need_positive](double x) {
                need_positive(x);
                return -c * std::pow(x, -c - 1.0);
            }};
}

UtilityProbe parse(const std::string& spec) {
    if (spec == "linear") return linear();
    if (spec == "normal-half") return normal_half();
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        const std::string name = spec.substr(0, colon);
        const double p = parse_number(spec.substr(colon + 1), spec);
        if (name == "cara") return cara(p);
        if (name == "crra") return crra(p);
    }
    throw ArgumentError("utility: unknown utility '" + spec + "' (linear, normal-half, cara:a, crra:c)");
}

}  // namespace utilities

RelativeAversionTarget RelativeAversionTarget::quarter_square() {
    return {[](double x) { return 0.25 * x * x; }, true};
}

RelativeAversionTarget RelativeAversionTarget::custom(std::function<double(double)> r_r) {
    if (!r_r) throw ArgumentError("utility: empty target");
    return {std::move(r_r), false};
}

UtilityProbe bias_cancelling_utility(const RelativeAversionTarget& target) {
    if (target.is_quarter_square()) return utilities::normal_half();

    auto r = std::make_shared<RelativeAversionTarget>(target);
    // r(s)/s, continued through s = 0 by its derivative when r(0) = 0.
    auto density = [r](double s) {
        if (s == 0.0) {
            const double h = 1e-6;
            return ((*r)(h) - (*r)(-h)) / (2.0 * h);
        }
        return (*r)(s) / s;
    };
    auto check_side = [r](double x) {
        if (x <= 0.0 && std::fabs((*r)(0.0)) > 1e-12) {
            throw DomainError("utility: target does not vanish at 0; u' undefined for x <= 0");
        }
    };
    auto u1 = [density, check_side](double x) {
        check_side(x);
        return std::exp(-integrate(density, 1.0, x));
    };
    auto u2 = [u1, density](double x) { return -density(x) * u1(x); };
    auto u = [u1](double x) { return integrate(u1, 1.0, x); };
    return {u, u1, u2};
}

}  // namespace pbs
