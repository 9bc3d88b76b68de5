#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "spde/gauss_hermite.hpp"
#include "spde/osgood.hpp"

namespace spde::weight {

/// Static comparison weight rho_0(x) = sqrt(log(e + |x|^2)) with analytic
/// gradient and Laplacian. Its Laplacian peaks at the origin (value d/e),
/// which is the constant C entering the K(M,T) bound.
struct StaticWeight {
    int dim = 1;

    double value(const double* x) const;
    void gradient(const double* x, double* out) const;
    double laplacian(const double* x) const;
    double sup_abs_laplacian() const;

    // d = 1 conveniences
    double value1(double x) const { return value(&x); }
    double laplacian1(double x) const { return laplacian(&x); }
};

struct EstimatorConfig {
    enum class Kind { GaussHermite, MonteCarlo };
    Kind kind = Kind::GaussHermite;
    int gh_nodes = 64;     // per axis
    int mc_paths = 100000; // total paths, generated as antithetic pairs
    uint64_t mc_seed = 1;
    double mc_se_tol = std::numeric_limits<double>::infinity();
};

struct ResidualReport {
    enum class Status { Pass, Inconclusive, Fail };
    double residual = 0.0;
    double budget = 0.0;
    double drho_dt = 0.0;
    double lap_rho = 0.0;
    double h_alpha_rho = 0.0;
    double rho = 0.0;
    double trunc_err = 0.0;
    double est_err = 0.0;
    Status status = Status::Inconclusive;
};

/// Dynamic super-solution weight
///   rho(t,x) = E[ H_a^{-1}( H_a( rho_0(x + B(t)) ) + t ) ],
/// estimated by tensor Gauss-Hermite quadrature (d <= 2) or antithetic
/// Monte Carlo. Evaluations are pure; the object is immutable.
class DynamicWeight {
public:
    DynamicWeight(osgood::AlphaScaledDrift scaled, int dim, double horizon,
                  EstimatorConfig est = {});

    /// Builds the transform sized so flows up to `horizon` stay invertible.
    static DynamicWeight make(const osgood::DriftSpec& drift, double alpha, int dim,
                              double horizon, EstimatorConfig est = {});

    double alpha() const { return scaled_.alpha(); }
    int dim() const { return dim_; }
    double horizon() const { return horizon_; }
    const osgood::AlphaScaledDrift& scaled() const { return scaled_; }
    const StaticWeight& static_weight() const { return rho0_; }

    /// rho(t, x); exact rho_0(x) at t = 0.
    double rho(double t, const double* x) const;
    double rho1(double t, double x) const { return rho(t, &x); }

    struct McEstimate {
        double mean = 0.0;
        double se = 0.0;
        int paths = 0;
    };
    McEstimate rho_mc(double t, const double* x, int paths, uint64_t seed) const;

    /// Centered-difference residual of d/dt rho - Laplacian/2 - h_alpha(rho),
    /// with a budget combining Richardson truncation and estimator noise.
    ResidualReport supersolution_residual(double t, const double* x,
                                          double dt_step = 1e-3,
                                          double dx_step = 1e-3) const;

    /// rho(t, r e_1)/rho_0(r e_1) along the given radii.
    std::vector<double> dominance_ratio(double t, const std::vector<double>& radii) const;

    /// Smallest C with rho(t,x) <= C e^{|x|+t} over the sampled grid.
    double fit_exponential_envelope(const std::vector<double>& ts,
                                    const std::vector<double>& radii) const;

private:
    double estimate(double t, const double* x) const; // dispatch on estimator
    double gh_estimate(double t, const double* x, int nodes) const;
    double integrand(double t, const double* y) const;

    osgood::AlphaScaledDrift scaled_;
    int dim_;
    double horizon_;
    EstimatorConfig est_;
    StaticWeight rho0_;
    GaussHermite gh_, gh_half_;
};

/// Sampled weight field row, matching the CSV export layout.
struct WeightFieldRow {
    double t = 0.0;
    double x[2] = {0.0, 0.0};
    double rho = 0.0;
    double drho_dt = 0.0;
    double lap_rho = 0.0;
    double residual = 0.0;
    double budget = 0.0;
};
std::vector<WeightFieldRow> sample_weight_field(const DynamicWeight& w,
                                                const std::vector<double>& ts,
                                                const std::vector<double>& xs);

/// Time-indexed field samples on a 1-d grid (C_0 surrogate: values vanish at
/// the grid boundary).
struct TimeSlices {
    std::vector<double> ts;
    std::vector<double> xs;
    std::vector<std::vector<double>> v; // v[time][x]
};

struct SupDerivReport {
    double lhs = 0.0;       // backward difference of sup_x v
    double rhs = 0.0;       // dv/dt at the maximizer
    double argmax_x = 0.0;
    bool conclusive = true; // false when the argmax sits on the boundary
    bool pass = false;
};

/// Upper-left derivative of a supremum: checks
/// d^-/dt sup_x v(t,x) <= dv/dt (t, x_t) at a maximizer x_t.
SupDerivReport sup_left_derivative_check(const TimeSlices& f, size_t time_index,
                                         double tol = 1e-6);

} // namespace spde::weight
