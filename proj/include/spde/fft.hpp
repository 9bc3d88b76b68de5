#pragma once

#include <complex>
#include <vector>

#include "spde/grid.hpp"

namespace spde {

using CVec = std::vector<std::complex<double>>;

/// Thin FFTW facade with process-lifetime plan caching. Plan creation is
/// serialized; execution on caller buffers is concurrent-safe.
///
/// Conventions: `backward` realizes f(x_j) = sum_k a_k e^{+i xi_k x_j}
/// unnormalized; `field_to_modes` returns amplitudes a_k (forward / N), so
/// modes_to_field(field_to_modes(f)) == f.
class Fft {
public:
    explicit Fft(const GridSpec& grid);

    const GridSpec& grid() const { return grid_; }

    void forward(std::complex<double>* a) const;
    void backward(std::complex<double>* a) const;

    void field_to_modes(const Field& f, CVec& modes) const;
    /// Synthesizes the real field; reports the imaginary residue (max |Im|).
    void modes_to_field(const CVec& modes, Field& out,
                        double* imag_residue = nullptr) const;

private:
    GridSpec grid_;
    void* fwd_ = nullptr; // fftw_plan, opaque here
    void* bwd_ = nullptr;
};

} // namespace spde
