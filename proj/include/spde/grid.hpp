#pragma once

#include <stdexcept>
#include <vector>

#include "spde/util.hpp"

namespace spde {

/// Periodic box [-L, L)^d sampled with n points per axis (n a power of two).
/// Grid point j has coordinate -L + j dx; discrete wavenumbers are
/// xi_k = pi k / L for signed k in [-n/2, n/2).
struct GridSpec {
    int dim = 1;
    int n = 256;
    double half_length = 16.0;

    GridSpec() = default;
    GridSpec(int d, int points, double L) : dim(d), n(points), half_length(L) {
        if (dim < 1 || dim > 2) throw std::invalid_argument("GridSpec: dim must be 1 or 2");
        if (n < 2 || (n & (n - 1)) != 0)
            throw std::invalid_argument("GridSpec: n must be a power of two");
        if (half_length <= 0.0) throw std::invalid_argument("GridSpec: box size > 0");
    }

    double spacing() const { return 2.0 * half_length / n; }
    int total() const { return dim == 1 ? n : n * n; }
    double nyquist() const { return kPi * (n / 2) / half_length; }

    double coord(int j) const { return -half_length + j * spacing(); }

    /// signed wavenumber for FFT index k in [0, n)
    double freq(int k) const {
        const int s = (k <= n / 2) ? k : k - n;
        return kPi * s / half_length;
    }

    /// |xi|^2 for a linear mode index (row-major (ky, kx) when dim == 2)
    double freq_sq(int idx) const {
        if (dim == 1) return sqr(freq(idx));
        return sqr(freq(idx % n)) + sqr(freq(idx / n));
    }

    bool same_as(const GridSpec& o) const {
        return dim == o.dim && n == o.n && half_length == o.half_length;
    }
};

using Field = std::vector<double>;

inline double sup_abs(const Field& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

} // namespace spde
