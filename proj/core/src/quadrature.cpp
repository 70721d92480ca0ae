#include "dopo/quadrature.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace dopo::quadrature {

Rule gauss_laguerre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_laguerre: need at least one node");

    // Laguerre recurrence: a_k = 2k+1 (diagonal), b_k = k (off-diagonal).
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        J(k, k) = 2.0 * k + 1.0;
        if (k + 1 < n) {
            const double b = k + 1.0;
            J(k, k + 1) = b;
            J(k + 1, k) = b;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int k = 0; k < n; ++k) {
        rule.nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        rule.weights[k] = v0 * v0; // mu0 = integral of e^{-x} = 1
    }
    return rule;
}

} // namespace dopo::quadrature
