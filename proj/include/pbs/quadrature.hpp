#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace pbs {

struct GaussRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    Eigen::Index size() const { return nodes.size(); }
};

// Nodes on [-1, 1], weights summing to 2.
GaussRule gauss_legendre(int n);

// Probabilists' rule: sum w_i f(z_i) approximates E[f(Z)], Z ~ N(0, 1).
GaussRule gauss_hermite(int n);

template <typename F>
double integrate(const GaussRule& legendre, F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < legendre.size(); ++i) {
        sum += legendre.weights[i] * f(mid + half * legendre.nodes[i]);
    }
    return half * sum;
}

// E[f(exp(mean_log + sd_log Z))] for standard normal Z.
template <typename F>
double lognormal_expectation(const GaussRule& hermite, F&& f, double mean_log, double sd_log) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < hermite.size(); ++i) {
        sum += hermite.weights[i] * f(std::exp(mean_log + sd_log * hermite.nodes[i]));
    }
    return sum;
}

}  // namespace pbs
