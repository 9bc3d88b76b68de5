#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "spde/drift.hpp"
#include "spde/util.hpp"

namespace spde::osgood {

struct TransformConfig {
    double x_max = 1e8;
    double x_min = 1e-9;          // first positive node; [0, x_min] handled directly
    int nodes_per_decade = 128;
    double panel_abs_tol = 1e-18; // per-panel quadrature floor
    double panel_rel_tol = 1e-12;
};

/// Result of a flow/inverse evaluation that may leave the double range:
/// `value` is finite when representable, otherwise `log_value` carries log(x*)
/// and `saturated` is set.
struct FlowValue {
    double value = 0.0;
    LogScalar log_value;
    bool saturated = false;
};

/// Tabulated Osgood transform H(x) = int_0^x dy/h(y) on log-spaced nodes with
/// exact endpoint derivatives (H' = 1/h) and cubic Hermite interpolation in
/// log x. Inversion brackets on the node table, then polishes with Newton.
class OsgoodTransform {
public:
    OsgoodTransform(DriftSpec drift, TransformConfig cfg = {});

    const DriftSpec& drift() const { return drift_; }
    const TransformConfig& config() const { return cfg_; }
    double x_max() const { return cfg_.x_max; }
    double range_max() const { return H_.back(); } // H(x_max)

    /// H(x); throws std::domain_error (x < 0) or std::out_of_range (x > x_max).
    double eval(double x) const;
    /// H^{-1}(y) within the tabulated range; throws std::out_of_range beyond.
    double inverse(double y) const;
    /// H^{-1}(y) for y possibly beyond the table: continues the integral in
    /// log-x coordinates; saturates to a log-domain answer.
    FlowValue inverse_extended(double y) const;

    /// theta(t, x) = H^{-1}(H(x) + t); exact identity at t = 0.
    FlowValue flow(double t, double x) const;

    const std::vector<double>& nodes() const { return x_; }
    const std::vector<double>& values() const { return H_; }

private:
    double hermite(double x, size_t panel) const;
    DriftSpec drift_;
    TransformConfig cfg_;
    std::vector<double> x_, t_, H_, dHdt_; // nodes, log-nodes, values, d/dlogx
};

struct OdeResult {
    double value = 0.0;
    bool blew_up = false;
    double reached_time = 0.0;
    long steps = 0;
};

/// Independent flow oracle: adaptive Cash-Karp RK45 on theta' = h(theta),
/// theta(0) = x. Flags blow-up when the state or step size degenerates.
OdeResult flow_ode_oracle(const DriftSpec& d, double t, double x,
                          double rel_tol = 1e-10, double abs_tol = 1e-12);

/// alpha-scaled calculus bound to a base transform: H_a(x) = H(x^a)/a,
/// H_a^{-1}(y) = (H^{-1}(a y))^{1/a}, h_a(x) = h(x^a)/x^{a-1}.
class AlphaScaledDrift {
public:
    AlphaScaledDrift(double alpha, std::shared_ptr<const OsgoodTransform> base);

    double alpha() const { return alpha_; }
    const OsgoodTransform& base() const { return *base_; }
    const DriftSpec& drift() const { return base_->drift(); }

    double h_alpha(double x) const { return osgood::h_alpha(drift(), alpha_, x); }
    double H_alpha(double x) const;
    double H_alpha_inv(double y) const;
    FlowValue H_alpha_inv_extended(double y) const;
    /// H_a^{-1}(H_a(x) + t); identity at t = 0.
    double flow_alpha(double t, double x) const;

    /// Independent route for the identity check: direct quadrature of 1/h_a.
    double H_alpha_direct(double x, double abs_tol = 1e-12, double rel_tol = 1e-10) const;

private:
    double alpha_;
    std::shared_ptr<const OsgoodTransform> base_;
};

/// Convexity-splitting residual q h_a(rho) + rho h_{a/(a-1)}(q) - h(rho q);
/// nonnegative for convex h up to roundoff.
double convexity_split_residual(const DriftSpec& d, double alpha, double rho,
                                double q);
/// Magnitude scale of the three terms, for relative tolerance tests.
double convexity_split_scale(const DriftSpec& d, double alpha, double rho,
                             double q);

enum class FamilyFn { Hn, ThetaN, Lk, Ek, Hfn };

/// Closed forms of the nested-log family: h_n, H_n(x) = L_n(x+E_n(1)) - 1,
/// theta_n(t,x) = E_n(L_n(x+E_n(1)) + t) - E_n(1), plus raw L_k / E_k.
/// Values that leave the double range are carried as towers.
struct FamilyValue {
    double value = 0.0;
    TowerReal tower;
    bool representable = true;
};
FamilyValue iterated_family(int n, FamilyFn fn, double t, double x);

/// Growth-restriction counterexample ladder: x_1 = 1,
/// x_{n+1} = exp(exp(exp(x_n))), with a concave node interpolant H(x_n) = n
/// (piecewise-linear in s = log log(x + e^e)). ratio_loglog is
/// log log [H^{-1}(H(x_n)+1) / exp(exp(x_n^nu))] in tower form.
struct CounterexampleProbe {
    int n = 0;
    TowerReal x_n;
    TowerReal x_next;        // H^{-1}(H(x_n) + 1)
    TowerReal ratio_loglog;
    bool capped = false;     // beyond plain-double representation
};
CounterexampleProbe counterexample_probe(int n, double nu = 1.9);

/// H of the probe's constructed interpolant on the representable window
/// [x_1, x_2]; H(x_1) = 1, H(x_2) = 2.
double counterexample_H(double x);
double counterexample_H_inverse(double y);

} // namespace spde::osgood
