#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spde/util.hpp"

namespace spde::osgood {

enum class DriftFamily { IteratedLog, LinearTest, PowerTest, CustomTable };

/// Polynomial envelope h(x) <= C (1 + x^p); C kept in log form because the
/// deeper iterated-log members are only representable that way.
struct PolyBound {
    LogScalar C;
    double p = 1.5;
};

/// A drift pair (f, h): f is the reaction term of the PDE, h its positive
/// increasing convex majorant used by the transform calculus. L(R) is an
/// increasing local Lipschitz envelope for f on [-R, R].
///
/// Families:
///   iterated-log n : h_n(x) = (x + E_n(1)) prod_{k=1}^{n-1} L_k(x + E_n(1)),
///                    f(x) = x * prod_{k=1}^{n-1} L_k(|x| + E_n(1))
///   linear-test    : f(x) = lambda x, h(x) = |lambda| (x + 1)
///   power-test     : f(x) = (1+|x|)^{1+delta}, h(x) = (1+x)^{1+delta}
///   custom table   : h interpolated log-log from samples, f(x) = x h(|x|)/(|x|+1)
///
/// The optional superlinear adjustment adds x*log(1+x) to h (smooth, convex),
/// which pushes h above c|y|log|y| while keeping |f| <= h.
class DriftSpec {
public:
    static DriftSpec iterated_log(int n, bool log_adjust = false);
    static DriftSpec linear_test(double lambda = 1.0, bool log_adjust = false);
    static DriftSpec power_test(double delta = 1.0);
    static DriftSpec custom_table(std::vector<double> xs, std::vector<double> hs);

    DriftFamily family() const { return family_; }
    int ilog_n() const { return n_; }
    double param() const { return param_; }
    bool log_adjusted() const { return log_adjust_; }
    const std::string& name() const { return name_; }

    double f(double x) const;
    /// h(x) for x >= 0; throws std::domain_error on negative input. May
    /// overflow for the deeper iterated-log members; use log_h then.
    double h(double x) const;
    double log_h(double x) const;
    /// log h(e^ell): h in log-log coordinates, valid far beyond double range.
    double log_h_of_log_x(double ell) const;
    /// log f magnitude, for domination checks at saturating scales.
    double log_abs_f(double x) const;

    /// phi_level(j, u) = effective tail exponent at level j of the nested-log
    /// coordinate ladder: phi_1(l) = log h(e^l) - l and
    /// phi_{j+1}(m) = phi_j(e^m) - m. Closed form for the analytic families;
    /// NaN when the level is not reachable (custom tables beyond level 2).
    double phi_tower(int level, double u) const;

    /// Increasing local Lipschitz envelope L(R) for f on [-R, R];
    /// throws std::domain_error on negative R.
    double lipschitz(double R) const;

    const PolyBound& poly_bound() const { return poly_; }

private:
    DriftSpec() = default;
    void fit_poly_bound();

    DriftFamily family_ = DriftFamily::LinearTest;
    int n_ = 0;            // iterated-log depth
    double param_ = 1.0;   // lambda or delta
    bool log_adjust_ = false;
    double offset_ = 1.0;  // E_n(1) for iterated-log
    std::string name_;
    std::vector<double> tab_logx_, tab_logh_; // custom: log(x), log h
    PolyBound poly_;
    mutable double lip_cache_R_ = -1.0, lip_cache_L_ = 0.0; // custom scan cache
};

/// Nested logs/exponentials: L_1 = log, L_{k+1} = log L_k; E_1 = exp,
/// E_{k+1} = exp E_k. E_k returned as a TowerReal since E_4(1) already
/// overflows a double.
double nested_log(int k, double x);
TowerReal nested_exp(int k, double x);

/// alpha-scaled majorant h_alpha(x) = h(x^alpha) / x^{alpha-1}, evaluated in
/// the log domain and capped at x = 1e-12 (its infimum is positive).
double h_alpha(const DriftSpec& d, double alpha, double x);

/// Saturation-aware evaluation: value plus log-domain carrier.
enum class DriftFn { F, H, L };
struct DriftEval {
    double value = 0.0;
    LogScalar log_value;
    bool saturated = false;
};
DriftEval eval_drift(const DriftSpec& d, DriftFn which, double x);

/// Ratio table L(R)/(log R)^{1+eps}; pass when the last decade trends down.
struct LipTrend {
    std::vector<double> radii;
    std::vector<double> ratios;
    bool pass = false;
};
LipTrend lip_over_log_trend(const DriftSpec& d, double eps,
                            const std::vector<double>& radii);

} // namespace spde::osgood
