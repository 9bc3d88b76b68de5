#include "spde/gauss_hermite.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <lapacke.h>

#include "spde/util.hpp"

namespace spde {

GaussHermite gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
    std::vector<double> diag(n, 0.0);
    std::vector<double> off(n > 1 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(0.5 * k);
    std::vector<double> z(static_cast<size_t>(n) * n, 0.0);
    const lapack_int info =
        LAPACKE_dstev(LAPACK_ROW_MAJOR, 'V', n, diag.data(), off.data(), z.data(), n);
    if (info != 0) throw std::runtime_error("gauss_hermite: dstev failed");
    GaussHermite gh;
    gh.nodes = diag;
    gh.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double v0 = z[static_cast<size_t>(0) * n + i]; // first eigenvector row
        gh.weights[i] = kSqrtPi * v0 * v0;
    }
    return gh;
}

} // namespace spde
