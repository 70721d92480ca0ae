#ifndef DOPO_QUADRATURE_HPP
#define DOPO_QUADRATURE_HPP

#include <vector>

namespace dopo::quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Laguerre rule for weight e^{-x} on [0, inf), exact for polynomials
// of degree <= 2n-1. Nodes/weights via Golub-Welsch on the Jacobi matrix.
Rule gauss_laguerre(int n);

} // namespace dopo::quadrature

#endif
