#include "hedge_kernel.hpp"

#include <cmath>
#include <cstddef>

namespace pbs::detail {

void hedge_gains(std::span<const double> log_moneyness, std::span<const double> spot_increments,
                 std::span<const double> inv_sqrt_tau, std::span<const double> half_sqrt_tau,
                 std::span<const double> sigmas, std::span<double> gains) {
    const std::size_t n = log_moneyness.size();
    const double* lm = log_moneyness.data();
    const double* ds = spot_increments.data();
    const double* ist = inv_sqrt_tau.data();
    const double* hst = half_sqrt_tau.data();

    for (std::size_t j = 0; j < sigmas.size(); ++j) {
        const double sigma = sigmas[j];
        const double inv_sigma = 1.0 / sigma;
        double sum = 0.0;
#pragma omp simd reduction(+ : sum)
        for (std::size_t i = 0; i < n; ++i) {
            const double d = lm[i] * ist[i] * inv_sigma + sigma * hst[i];
            const double t = 1.0 / (1.0 + 0.2316419 * std::fabs(d));
            const double poly =
                t * (0.319381530 + t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
            const double tail = 0.3989422804014327 * std::exp(-0.5 * d * d) * poly;
            const double delta = d >= 0.0 ? 1.0 - tail : tail;
            sum += delta * ds[i];
        }
        gains[j] = sum;
    }
}

}  // namespace pbs::detail
