#include "spde/fft.hpp"

#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

namespace spde {

namespace {

std::mutex plan_mutex;
std::map<std::tuple<int, int, int>, fftw_plan> plan_cache; // (dim, n, sign)

fftw_plan get_plan(const GridSpec& g, int sign) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    const auto key = std::make_tuple(g.dim, g.n, sign);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(g.total());
    fftw_plan p;
    if (g.dim == 1)
        p = fftw_plan_dft_1d(g.n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    else
        p = fftw_plan_dft_2d(g.n, g.n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plan_cache.emplace(key, p);
    return p;
}

} // namespace

Fft::Fft(const GridSpec& grid) : grid_(grid) {
    fwd_ = get_plan(grid_, FFTW_FORWARD);
    bwd_ = get_plan(grid_, FFTW_BACKWARD);
}

void Fft::forward(std::complex<double>* a) const {
    fftw_execute_dft(static_cast<fftw_plan>(fwd_),
                     reinterpret_cast<fftw_complex*>(a),
                     reinterpret_cast<fftw_complex*>(a));
}

void Fft::backward(std::complex<double>* a) const {
    fftw_execute_dft(static_cast<fftw_plan>(bwd_),
                     reinterpret_cast<fftw_complex*>(a),
                     reinterpret_cast<fftw_complex*>(a));
}

void Fft::field_to_modes(const Field& f, CVec& modes) const {
    const int N = grid_.total();
    modes.resize(N);
    for (int i = 0; i < N; ++i) modes[i] = f[i];
    forward(modes.data());
    const double inv = 1.0 / N;
    for (auto& m : modes) m *= inv;
}

void Fft::modes_to_field(const CVec& modes, Field& out, double* imag_residue) const {
    CVec tmp = modes;
    backward(tmp.data());
    const int N = grid_.total();
    out.resize(N);
    double worst = 0.0;
    for (int i = 0; i < N; ++i) {
        out[i] = tmp[i].real();
        worst = std::max(worst, std::abs(tmp[i].imag()));
    }
    if (imag_residue) *imag_residue = worst;
}

} // namespace spde
