#pragma once

#include <vector>

namespace spde {

/// Gauss-Hermite rule for the weight e^{-x^2}: sum_i w_i f(x_i) approximates
/// the integral of f against e^{-x^2} over the line. For Z ~ N(0,1),
/// E[g(Z)] = (1/sqrt(pi)) * sum_i w_i g(sqrt(2) x_i).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch construction from the Hermite Jacobi matrix.
GaussHermite gauss_hermite(int n);

} // namespace spde
