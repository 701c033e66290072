#pragma once

#include <span>

namespace pbs::detail {

// gains[j] = sum_i Phi(d1_ij) * spot_increments[i], with
// d1_ij = log_moneyness[i] * inv_sqrt_tau[i] / sigma_j + sigma_j * half_sqrt_tau[i].
// Phi uses Abramowitz-Stegun 26.2.17 (absolute error below 7.5e-8).
void hedge_gains(std::span<const double> log_moneyness, std::span<const double> spot_increments,
                 std::span<const double> inv_sqrt_tau, std::span<const double> half_sqrt_tau,
                 std::span<const double> sigmas, std::span<double> gains);

}  // namespace pbs::detail
