#pragma once

// Error structures on a parameter and the bias / variance chain rules.
//
// An error structure is carried by its densities evaluated at the reference
// point: the perturbed parameter behaves like
//     value + epsilon * bias + sqrt(epsilon * variance) * N(0, 1)
// and a C^2 function F of it picks up
//     A[F] = F' A + F''/2 Gamma,   Gamma[F] = F'^2 Gamma.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "pbs/errors.hpp"

namespace pbs {

template <typename Scalar = double>
struct ErrorStructure {
    Scalar value{};
    Scalar bias{};      // A[X] at the reference point, per unit epsilon
    Scalar variance{};  // Gamma[X] at the reference point, per unit epsilon
    Scalar epsilon{1};
};

template <typename Scalar = double>
struct MultiErrorStructure {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Vector value;
    Vector bias;
    Matrix covariance;
    Scalar epsilon{1};

    Eigen::Index dimension() const { return value.size(); }
};

// f and its first two derivatives, evaluated pointwise.
template <typename Scalar = double>
struct SmoothFunctionProbe {
    std::function<Scalar(Scalar)> f;
    std::function<Scalar(Scalar)> f1;
    std::function<Scalar(Scalar)> f2;
};

template <typename Scalar = double>
struct MultiFunctionProbe {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Eigen::Index dimension = 0;
    std::function<Scalar(const Vector&)> f;
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian;
};

// dX = a(X) dB + b(X) dt started at x0.
template <typename Scalar = double>
struct DiffusionSpec {
    std::function<Scalar(Scalar)> a;
    std::function<Scalar(Scalar)> b;
    Scalar x0{};
};

template <typename Scalar = double>
struct PerturbationMoments {
    Scalar bias{};
    Scalar variance{};
};

inline constexpr double kCovarianceTolerance = 1e-12;

namespace detail {

template <typename Scalar>
bool finite(Scalar v) {
    using std::isfinite;
    return isfinite(v);
}

template <typename Scalar>
Scalar checked(Scalar v, const char* what) {
    if (!finite(v)) {
        throw DomainError(std::string(what) + " is not finite at the reference point");
    }
    return v;
}

}  // namespace detail

template <typename Scalar>
void validate(const ErrorStructure<Scalar>& es) {
    if (!detail::finite(es.value) || !detail::finite(es.bias) || !detail::finite(es.variance) ||
        !detail::finite(es.epsilon)) {
        throw ArgumentError("error structure: all fields must be finite");
    }
    if (es.variance < Scalar(0)) throw ArgumentError("error structure: variance must be >= 0");
    // epsilon == 0 is the unperturbed model.
    if (es.epsilon < Scalar(0)) throw ArgumentError("error structure: epsilon must be >= 0");
}

template <typename Scalar>
void validate(const MultiErrorStructure<Scalar>& es) {
    const auto d = es.dimension();
    if (d == 0 || es.bias.size() != d || es.covariance.rows() != d || es.covariance.cols() != d) {
        throw ArgumentError("multi error structure: inconsistent dimensions");
    }
    if (!es.value.allFinite() || !es.bias.allFinite() || !es.covariance.allFinite() ||
        !detail::finite(es.epsilon) || es.epsilon < Scalar(0)) {
        throw ArgumentError("multi error structure: non-finite entries or negative epsilon");
    }
    const Scalar asymmetry = (es.covariance - es.covariance.transpose()).cwiseAbs().maxCoeff();
    if (asymmetry > Scalar(kCovarianceTolerance)) {
        throw ArgumentError("multi error structure: covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<typename MultiErrorStructure<Scalar>::Matrix> eig(
        es.covariance, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < Scalar(-kCovarianceTolerance)) {
        throw ArgumentError("multi error structure: covariance is not positive semidefinite");
    }
}

template <typename Scalar>
ErrorStructure<Scalar> propagate_scalar(const SmoothFunctionProbe<Scalar>& probe,
                                        const ErrorStructure<Scalar>& es) {
    validate(es);
    const Scalar x = es.value;
    const Scalar f0 = detail::checked(probe.f(x), "f");
    const Scalar f1 = detail::checked(probe.f1(x), "f'");
    const Scalar f2 = detail::checked(probe.f2(x), "f''");
    return {f0, f1 * es.bias + Scalar(0.5) * f2 * es.variance, f1 * f1 * es.variance, es.epsilon};
}

template <typename Scalar>
ErrorStructure<Scalar> propagate_multi(const MultiFunctionProbe<Scalar>& probe,
                                       const MultiErrorStructure<Scalar>& es) {
    if (probe.dimension != es.dimension()) {
        throw ArgumentError("propagate_multi: probe dimension " + std::to_string(probe.dimension) +
                            " does not match error structure dimension " +
                            std::to_string(es.dimension()));
    }
    validate(es);
    const Scalar f0 = detail::checked(probe.f(es.value), "F");
    const auto grad = probe.gradient(es.value);
    const auto hess = probe.hessian(es.value);
    if (grad.size() != es.dimension() || hess.rows() != es.dimension() ||
        hess.cols() != es.dimension()) {
        throw ArgumentError("propagate_multi: derivative evaluators returned wrong shapes");
    }
    if (!grad.allFinite() || !hess.allFinite()) {
        throw DomainError("propagate_multi: derivatives are not finite at the reference point");
    }
    const Scalar bias = es.bias.dot(grad) + Scalar(0.5) * es.covariance.cwiseProduct(hess).sum();
    const Scalar variance = grad.dot(es.covariance * grad);
    return {f0, bias, variance, es.epsilon};
}

// The generator gives the bias, the martingale part gives the variance.
template <typename Scalar>
PerturbationMoments<Scalar> diffusion_perturbation(const DiffusionSpec<Scalar>& spec,
                                                   const SmoothFunctionProbe<Scalar>& probe) {
    const Scalar x0 = spec.x0;
    const Scalar a = detail::checked(spec.a(x0), "a");
    const Scalar b = detail::checked(spec.b(x0), "b");
    const Scalar f1 = detail::checked(probe.f1(x0), "F'");
    const Scalar f2 = detail::checked(probe.f2(x0), "F''");
    return {f1 * b + Scalar(0.5) * f2 * a * a, f1 * f1 * a * a};
}

template <typename Scalar>
Scalar perturbed_sample(const ErrorStructure<Scalar>& es, Scalar gaussian_draw) {
    using std::sqrt;
    return es.value + es.epsilon * es.bias + sqrt(es.epsilon * es.variance) * gaussian_draw;
}

// Central-difference derivatives for functions without closed forms.
template <typename Scalar>
SmoothFunctionProbe<Scalar> finite_difference_probe(std::function<Scalar(Scalar)> f) {
    using std::abs;
    using std::cbrt;
    using std::sqrt;
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    const Scalar h1 = cbrt(eps);
    // Second differences lose two orders to cancellation; eps^(1/4) balances that.
    const Scalar h2 = sqrt(sqrt(eps));
    SmoothFunctionProbe<Scalar> probe;
    probe.f = f;
    probe.f1 = [f, h1](Scalar x) {
        const Scalar h = h1 * (abs(x) + Scalar(1));
        return (f(x + h) - f(x - h)) / (Scalar(2) * h);
    };
    probe.f2 = [f, h2](Scalar x) {
        const Scalar h = h2 * (abs(x) + Scalar(1));
        return (f(x + h) - Scalar(2) * f(x) + f(x - h)) / (h * h);
    };
    return probe;
}

// Largest relative gap between the supplied derivatives and central differences of f.
template <typename Scalar>
Scalar probe_inconsistency(const SmoothFunctionProbe<Scalar>& probe, std::span<const Scalar> points) {
    using std::abs;
    using std::max;
    const auto fd = finite_difference_probe<Scalar>(probe.f);
    Scalar worst{0};
    for (const Scalar x : points) {
        const Scalar d1 = probe.f1(x);
        const Scalar d2 = probe.f2(x);
        worst = max(worst, abs(fd.f1(x) - d1) / max(abs(d1), Scalar(1)));
        worst = max(worst, abs(fd.f2(x) - d2) / max(abs(d2), Scalar(1)));
    }
    return worst;
}

}  // namespace pbs
