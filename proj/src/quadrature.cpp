#include "pbs/quadrature.hpp"

#include <algorithm>
#include <string>

#include "pbs/errors.hpp"

namespace pbs {
namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix,
// weights the squared first eigenvector components times the total mass.
GaussRule golub_welsch(const Eigen::VectorXd& off_diagonal, double mass) {
    const Eigen::Index n = off_diagonal.size() + 1;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        jacobi(k, k + 1) = off_diagonal[k];
        jacobi(k + 1, k) = off_diagonal[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    if (eig.info() != Eigen::Success) throw NumericError("golub_welsch: eigensolve failed");

    GaussRule rule;
    rule.nodes = eig.eigenvalues();
    rule.weights = mass * eig.eigenvectors().row(0).transpose().array().square();

    // Symmetric weight functions: enforce exact symmetry of the rule.
    for (Eigen::Index i = 0; i < n / 2; ++i) {
        const Eigen::Index j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

void check_order(int n, const char* name) {
    if (n < 1 || n > 512) {
        throw ArgumentError(std::string(name) + ": order must lie in [1, 512]");
    }
}

}  // namespace

GaussRule gauss_legendre(int n) {
    check_order(n, "gauss_legendre");
    if (n == 1) return {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0)};
    Eigen::VectorXd beta(n - 1);
    for (int k = 1; k < n; ++k) beta[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    return golub_welsch(beta, 2.0);
}

GaussRule gauss_hermite(int n) {
    check_order(n, "gauss_hermite");
    if (n == 1) return {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
    Eigen::VectorXd beta(n - 1);
    for (int k = 1; k < n; ++k) beta[k - 1] = std::sqrt(static_cast<double>(k));
    return golub_welsch(beta, 1.0);
}

}  // namespace pbs
