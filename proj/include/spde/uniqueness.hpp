#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spde/solver.hpp"

namespace spde::uniq {

/// Exponent chain for the weighted-difference apparatus: eps from the
/// Lipschitz growth assumption, nu < nu1 = nu(1+eps) < nu2 < 2. The chain is
/// enforced at construction.
struct UniquenessParams {
    double eps;
    double nu;
    double nu1;
    double nu2;
    double K;
    double T;

    UniquenessParams(double eps_, double nu_, double nu2_, double K_, double T_);
    static UniquenessParams defaults(double eps = 0.5, double T = 1.0);
};

/// Discrete L2 norm of (u1 - u2) exp(-(K + |x|^2)^{nu2/2}); its square equals
/// the box quadrature of (u1-u2)^2 exp(-2 (K+|x|^2)^{nu2/2}).
double weighted_diff_norm(const Field& u1, const Field& u2, const GridSpec& g,
                          const UniquenessParams& p);

struct SelectKResult {
    double K = 0.0;
    bool found = false;
    double worst_x = 0.0;     // witness when not found
    double worst_value = 0.0; // bracket value at the witness
};

/// Smallest K on a doubling ladder making the decay bracket
///   C(1+|x|^{nu1}) + nu2^2 (1+T+T^2/2)(K+|x|^2)^{nu2-1}
///   + T nu (nu+d-2) (K+|x|^2)^{nu2/2-1} - (K+|x|^2)^{nu2/2} / 2
/// non-positive at every grid point.
SelectKResult select_K(const UniquenessParams& p, double M_realized, double C_lip,
                       const GridSpec& g);

/// Smallest C with L(M e^{r^nu}) <= C (1 + r^{nu1}) over the grid radii.
double measure_C_lip(const osgood::DriftSpec& d, double M,
                     const UniquenessParams& p, const GridSpec& g);

/// Ratio trend L(R)/(log R)^{1+eps}; thin wrapper over the drift calculus.
osgood::LipTrend lip_growth_check(const osgood::DriftSpec& d, double eps,
                                  const std::vector<double>& radii);

/// Weak-form residual at a recorded step:
///   <u(t), phi> - <u(0), phi> - int <u, Lap phi>/2 - int <f_N(u), phi>
///   - sigma pairing,
/// all accumulated during evolve from the identical Gaussian increments.
double weak_residual(const solver::SolutionTrace& trace, size_t phi_index,
                     double t);

struct DecayRow {
    double t = 0.0;
    std::string level_pair;
    double norm = 0.0;
};
struct DecayTable {
    std::vector<DecayRow> rows;
    double K = 0.0;
    double nu = 0.0, nu1 = 0.0, nu2 = 0.0;
};

/// Runs the same noise path at cutoff levels {N, 2N} and reports the weighted
/// L2 distance at t in {T/4, T/2, T}.
DecayTable uniqueness_experiment(const solver::SolverConfig& cfg,
                                 std::shared_ptr<const noise::NoiseStream> noise,
                                 const std::vector<double>& levels,
                                 const UniquenessParams& p);

/// Distances between runs at dt, dt/2, dt/4, ... on the shared fine noise
/// path, evaluated at t_eval; successive ratios sit near 1/2 for a
/// first-order scheme.
std::vector<double> dt_refinement_norms(const solver::SolverConfig& cfg,
                                        std::shared_ptr<const noise::NoiseStream> noise,
                                        const UniquenessParams& p, int halvings,
                                        double t_eval);

} // namespace spde::uniq
