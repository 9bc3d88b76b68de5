#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "spde/drift.hpp"
#include "spde/fft.hpp"
#include "spde/grid.hpp"
#include "spde/noise.hpp"
#include "spde/weight.hpp"

namespace spde::solver {

/// Initial data u(0, .) with its weighted audit sup |u0| / rho_0.
struct InitialData {
    enum class Kind { Zero, Constant, CosMode, Rho0, Sine, Spike, Custom };
    Kind kind = Kind::Zero;
    double amplitude = 1.0;
    int mode = 1; // CosMode: cos(mode-th wavenumber * x)
    std::function<double(double, double)> custom;

    static InitialData zero() { return {}; }
    static InitialData constant(double c) { return {Kind::Constant, c, 1, nullptr}; }
    static InitialData cos_mode(double a, int k) { return {Kind::CosMode, a, k, nullptr}; }
    static InitialData rho0() { return {Kind::Rho0, 1.0, 1, nullptr}; }
    static InitialData sine(double a = 1.0) { return {Kind::Sine, a, 1, nullptr}; }
    static InitialData spike() { return {Kind::Spike, 1.0, 1, nullptr}; }

    Field sample(const GridSpec& g) const;
    double audit_sup_ratio(const GridSpec& g) const;
};

/// Smooth compactly supported bump A b((x-c)/r), b(s) = exp(-1/(1-s^2)),
/// with analytic Laplacian; product bump in d = 2.
struct TestFunction {
    int dim = 1;
    double center[2] = {0.0, 0.0};
    double radius = 4.0;
    double amplitude = 1.0;

    double value(const double* x) const;
    double laplacian(const double* x) const;
    bool supported_inside(const GridSpec& g) const;
};

enum class Scheme { ExpEuler, Picard };
enum class ReactionMode { Euler, Adaptive };

struct SolverConfig {
    GridSpec grid;
    double dt = 1.0 / 256;
    double horizon = 1.0;
    Scheme scheme = Scheme::ExpEuler;
    /// Euler: drift enters as dt * S(dt) f_N(u), first order. Adaptive:
    /// the reaction is integrated pointwise inside each step by adaptive RK
    /// (Lie split), which pins blow-up times to sub-step accuracy.
    ReactionMode reaction = ReactionMode::Euler;
    double cutoff_N = 1e12;
    double sigma = 0.0;
    std::optional<osgood::DriftSpec> drift;
    InitialData u0;
    double blowup_threshold = 1e8;
    double picard_tol = 1e-12;
    int store_every = 0; // 0: max(1, steps/64)

    int steps() const;
};

struct WeakAccum {
    std::vector<double> u_phi;     // <u(t_j), phi> per step
    std::vector<double> int_lap;   // left-rule int_0^{t_j} <u, Lap phi / 2>
    std::vector<double> int_drift; // left-rule int_0^{t_j} <f_N(u), phi>
    std::vector<double> pairing;   // accumulated <phi, sigma dW> surrogate
};

struct SolutionTrace {
    GridSpec grid;
    double dt = 0.0;
    double cutoff_N = 0.0;
    std::vector<double> times;       // per step, starting at 0
    std::vector<double> sup_u;       // sup |u| per step
    std::vector<double> sup_z;       // sup |z| per step
    std::vector<double> sup_z_ratio; // sup |z| / rho_0 per step
    std::vector<size_t> stored;      // step indices with full fields
    std::vector<Field> u_fields;
    std::vector<Field> z_fields;     // z = U_0 + Z (uncut)
    std::vector<WeakAccum> weak;
    bool blowup = false;
    double blowup_time = 0.0;

    double realized_M() const;       // sup over steps of sup |z| / rho_0
    bool has_field(size_t step) const;
    const Field& u_at(size_t step) const;
    const Field& z_at(size_t step) const;
    size_t stored_slot(size_t step) const;
};

/// Spectral heat semigroup e^{t Lap/2}: multiplier e^{-|xi|^2 t / 2}.
Field apply_heat_semigroup(const Field& f, const GridSpec& g, double t);

struct InitialCheck {
    Field U0;
    bool jensen_pass = false;
    double worst_ratio = 0.0; // max U0 / (C sqrt(log(e + |x|^2 + t)))
    double C = 0.0;
};
/// U_0(t, .) = S(t) u0 and the Jensen-type bound
/// U_0(t,x) <= C sqrt(log(e + |x|^2 + t)) with C the initial-data audit value.
InitialCheck initial_convolve_and_check(const InitialData& u0, const GridSpec& g,
                                        double t);

/// clamp to [-N, N]
double cutoff_value(double z, double N);
Field cutoff_field(const Field& f, double N);
/// f_N(u) = f(clamp(u, -N, N)); globally Lipschitz with constant L(N)
template <typename F>
double apply_cutoff(const F& f, double N, double u) {
    return f(cutoff_value(u, N));
}
double cutoff_drift(const osgood::DriftSpec& d, double N, double u);

/// Exponential-Euler mild evolution
///   u(t+dt) = S(dt) u(t) + dt S(dt) f_N(u(t)) + (Z(t+dt) - S(dt) Z(t)),
/// exact for zero drift. Monitors every step, fields at the store cadence,
/// weak-form accumulators for the given test functions. Non-finite or
/// above-threshold values raise the blow-up flag instead of crashing.
SolutionTrace evolve(const SolverConfig& cfg,
                     std::shared_ptr<const noise::NoiseStream> noise = nullptr,
                     const std::vector<TestFunction>& phis = {});

/// Windowed Picard iteration for the cutoff equation: window length chosen so
/// L(N) T_c <= 1/2, fixed point of
///   u = S(. - t0) v(t0) + int S(. - s) f_N(u(s)) ds + z_N
/// on each window; per-sweep contraction is verified.
SolutionTrace picard_solve(const SolverConfig& cfg,
                           std::shared_ptr<const noise::NoiseStream> noise = nullptr);

/// rho(t, x) precomputed on (stored times) x (grid), exploiting the radial
/// symmetry of the weight; shared across paths with identical configs.
class RhoGridTable {
public:
    RhoGridTable(const weight::DynamicWeight& w, const GridSpec& g,
                 const std::vector<double>& times);
    double at(size_t time_slot, int grid_idx) const {
        return values_[time_slot][grid_idx];
    }
    const std::vector<double>& times() const { return times_; }
    bool matches(const GridSpec& g, const std::vector<double>& times) const;

private:
    GridSpec grid_;
    std::vector<double> times_;
    std::vector<std::vector<double>> values_;
};

struct MonitorReport {
    double M = 0.0;
    LogScalar K;            // K(M,T) = max{2M, H_b^{-1}(H_b(2M) + (CM+1)T)}, b = a/(a-1)
    bool K_saturated = false;
    double C_lap = 0.0;     // sup |Lap rho_0|
    std::vector<size_t> steps;
    std::vector<double> sup_q;          // sup_x (v_N + M rho_0)/rho per stored step
    std::vector<double> argmax_x;
    std::vector<double> sup_u_over_rho;
    bool bound_pass = false;            // sup |u|/rho <= K at every stored step
};

/// Weighted monitors over a completed trace: M from the trace's own z,
/// q_N = (v_N + M rho_0)/rho, and the explicit K(M,T) bound.
MonitorReport monitor_weighted(const SolutionTrace& trace,
                               const weight::DynamicWeight& w,
                               const RhoGridTable* table = nullptr);

struct StabilizationRow {
    double N = 0.0;
    double d_sup = 0.0; // sup over central half-box, stored steps, of |v_N - v_{2N}|
};

/// Runs the same noise path at increasing cutoff levels and reports
/// d(N) = sup |v_N - v_{2N}|; once N clears the realized field the cutoffs
/// are inactive and d collapses to zero.
std::vector<StabilizationRow> stabilization_check(
    const SolverConfig& cfg, std::shared_ptr<const noise::NoiseStream> noise,
    const std::vector<double>& levels);

} // namespace spde::solver
