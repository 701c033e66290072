#pragma once

// Risk aversion meets the error calculus: a trader whose utility has zero bias
// on its wealth prices errors with A = (r_a / 2) Gamma, i.e. r_r = 2 X A / Gamma.

#include <functional>
#include <string>

#include "pbs/error_calculus.hpp"

namespace pbs {

struct UtilityProbe {
    std::function<double(double)> u;
    std::function<double(double)> u1;
    std::function<double(double)> u2;

    SmoothFunctionProbe<> as_probe() const { return {u, u1, u2}; }
};

struct AversionReport {
    double rho = 0.0;  // risk price (sigma^2 / 2) r_a
    double r_a = 0.0;  // -u'' / u'
    double r_r = 0.0;  // -x u'' / u'
};

AversionReport aversion_indices(const UtilityProbe& u, double x, double sigma2);

struct HypothesisStarResult {
    double bias_of_utility = 0.0;
    bool satisfied = false;
};

// The utility of the perturbed wealth carries no bias.
HypothesisStarResult hypothesis_star_check(const UtilityProbe& u, const ErrorStructure<>& es);

// Bias making the utility unbiased: A = (r_a / 2) Gamma.
double neutral_bias(const UtilityProbe& u, double x, double variance);

namespace utilities {

UtilityProbe linear();
UtilityProbe normal_half();            // Phi(x / 2), r_r = x^2 / 4
UtilityProbe cara(double a);           // -exp(-a x) / a
UtilityProbe crra(double c);           // u' = x^-c, x > 0

// "linear", "normal-half", "cara:<a>", "crra:<c>".
UtilityProbe parse(const std::string& spec);

}  // namespace utilities

class RelativeAversionTarget {
public:
    static RelativeAversionTarget quarter_square();
    static RelativeAversionTarget custom(std::function<double(double)> r_r);

    double operator()(double x) const { return r_r_(x); }
    bool is_quarter_square() const { return quarter_square_; }

private:
    RelativeAversionTarget(std::function<double(double)> f, bool q) : r_r_(std::move(f)), quarter_square_(q) {}
    std::function<double(double)> r_r_;
    bool quarter_square_ = false;
};

inline constexpr double kUtilityQuadratureTolerance = 1e-10;

// Utility with relative aversion equal to the target. X^2/4 has the closed
// form Phi(x/2); any other target integrates u''/u' = -r_r(x)/x numerically
// with the gauge u'(1) = 1, u(1) = 0. Evaluating on the far side of 0 throws
// DomainError unless the target vanishes there.
UtilityProbe bias_cancelling_utility(const RelativeAversionTarget& target);

}  // namespace pbs
