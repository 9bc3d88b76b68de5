#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spde/fft.hpp"
#include "spde/grid.hpp"
#include "spde/rng.hpp"
#include "spde/weight.hpp"

namespace spde::noise {

enum class MeasureKind { White, Riesz, ExpDecay };

/// Radial spectral density mu(|xi|) of the spatial covariance. Riesz uses
/// |xi|^{beta-d} (beta in (0, d)); exp-decay uses e^{-a |xi|}.
struct SpectralMeasure {
    MeasureKind kind = MeasureKind::White;
    double param = 0.0;
    int dim = 1;

    static SpectralMeasure white(int d) { return {MeasureKind::White, 0.0, d}; }
    static SpectralMeasure riesz(double beta, int d);
    static SpectralMeasure exp_decay(double a, int d);

    double density(double r) const;
    /// density with the infrared cell-average fix for the zero mode
    double grid_density(double r, double dxi) const;
    /// power-law exponent of mu at infinity (-inf for exp-decay)
    double tail_exponent() const;
    std::string name() const;
};

struct DalangReport {
    bool finite = false;
    double value = 0.0;         // finite part + tail estimate when convergent
    double eta = 0.0;
    double radial_exponent = 0.0; // s in integrand ~ r^s; divergent iff s >= -1
    std::string note;
};

/// Audits int mu(dxi) / (1 + |xi|^{2(1-eta)}): adaptive quadrature on a disk
/// plus an analytic power-law tail comparison.
DalangReport dalang_integral(const SpectralMeasure& mu, double eta);

/// Addressable Gaussian increments of the semi-discrete stochastic
/// convolution. Every fine step consumes one counter per mode, so paths are
/// reproducible and can be shared across time resolutions: a coarse step is
/// the exact semigroup composition of its fine substeps.
///
/// Discrete convention: mode amplitudes A_k with Z(x_j) = sum_k A_k e^{i xi_k x_j},
/// Hermitian symmetry A_{-k} = conj(A_k), per-mode OU dynamics
///   A_k(t+dt) = e^{-|xi_k|^2 dt / 2} A_k(t) + eta_k(dt),
///   Var eta_k(dt) = sigma^2 mu(xi_k) (2L)^{-d} (1 - e^{-|xi_k|^2 dt}) / |xi_k|^2
/// (dt-linear limit at the zero mode). Stationary complex-mode variance is
/// sigma^2 mu(xi_k) (2L)^{-d} / |xi_k|^2, split evenly between Re and Im.
class NoiseStream {
public:
    NoiseStream(GridSpec grid, SpectralMeasure mu, double sigma, uint64_t seed,
                uint64_t path, double dt_fine);

    const GridSpec& grid() const { return grid_; }
    double sigma() const { return sigma_; }
    double dt_fine() const { return dt_fine_; }
    uint64_t seed() const { return seed_; }
    uint64_t path() const { return path_; }

    /// OU-filtered increment Z(t+dt) - S(dt) Z(t) over `substeps` fine steps
    /// starting at fine index `fine_start`; optionally also the plain sum of
    /// the same Gaussians (the white-noise pairing surrogate).
    void coarse_increment(uint64_t fine_start, int substeps, CVec& filtered,
                          CVec* plain = nullptr) const;

    double lambda(int mode) const { return lambda_[mode]; }          // |xi|^2 / 2
    double variance_coef(int mode) const { return vcoef_[mode]; }    // sigma^2 mu (2L)^{-d}
    /// Var of a mode when started from zero and evolved for time t.
    double mode_variance(int mode, double t) const;
    double step_variance(int mode, double dt) const { return mode_variance(mode, dt); }

private:
    void fine_increment(uint64_t fine_index, CVec& out) const;

    GridSpec grid_;
    SpectralMeasure mu_;
    double sigma_;
    uint64_t seed_, path_;
    double dt_fine_;
    CounterRng rng_;
    std::vector<double> lambda_, vcoef_;
    std::vector<int> owner_;  // mirror partner; == self for self-conjugate modes
};

/// Spectral state of the stochastic convolution Z; starts at Z(0) = 0.
class StochConvState {
public:
    explicit StochConvState(std::shared_ptr<const NoiseStream> stream);

    const NoiseStream& stream() const { return *stream_; }
    double time() const { return time_; }
    uint64_t fine_cursor() const { return fine_cursor_; }
    const CVec& modes() const { return modes_; }

    /// Exact-in-distribution update over dt (an integer number of fine steps).
    void step(double dt);

    Field field(const Fft& fft, double* imag_residue = nullptr) const;

private:
    std::shared_ptr<const NoiseStream> stream_;
    CVec modes_;
    double time_ = 0.0;
    uint64_t fine_cursor_ = 0;
};

/// Analytic spatial covariance at integer cell lags: sum_k V_k(t) cos(xi_k r).
std::vector<double> analytic_covariance(const NoiseStream& s, double t,
                                        const std::vector<int>& lags);

struct CovarianceReport {
    std::vector<int> lags;
    std::vector<double> empirical, analytic, z_scores;
    double chi2 = 0.0;
    double critical = 0.0; // chi-square 1% critical value for #lags dof
    bool pass = false;
};

/// Compares empirical spatial covariance over independent samples of Z(t, .)
/// against the analytic mode sum; chi-square style gate at the 1% level.
CovarianceReport validate_covariance(const std::vector<Field>& samples,
                                     const NoiseStream& s, double t,
                                     const std::vector<int>& lags = {0, 1, 2, 4});

struct GrowthStat {
    double sup_ratio = 0.0; // sup_{t <= T, x} |Z(t,x)| / rho_0(x)
    double sup_abs = 0.0;
};

/// Runs a fresh trajectory to horizon T in `steps` increments and records the
/// weighted growth statistic.
GrowthStat growth_stat(const std::shared_ptr<const NoiseStream>& stream,
                       double T, int steps);

} // namespace spde::noise
