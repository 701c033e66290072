#pragma once

#include <cmath>
#include <numbers>
#include <type_traits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "pbs/errors.hpp"

namespace pbs {

template <typename Scalar>
inline Scalar normal_pdf(Scalar z) {
    using std::exp;
    using std::sqrt;
    if constexpr (std::is_floating_point_v<Scalar>) {
        return exp(Scalar(-0.5) * z * z) * Scalar(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
    } else {
        return exp(Scalar(-0.5) * z * z) / sqrt(Scalar(2) * boost::math::constants::pi<Scalar>());
    }
}

// erfc keeps full relative accuracy in both tails.
template <typename Scalar>
inline Scalar normal_cdf(Scalar z) {
    if constexpr (std::is_floating_point_v<Scalar>) {
        return Scalar(0.5) * std::erfc(-z * Scalar(std::numbers::sqrt2 / 2.0));
    } else {
        // Extended precision, e.g. for finite-difference oracles.
        using std::sqrt;
        return Scalar(0.5) * boost::math::erfc(-z / sqrt(Scalar(2)));
    }
}

inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile: probability must lie in (0, 1)");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace pbs
