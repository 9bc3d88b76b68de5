#pragma once

#include <string>
#include <vector>

#include "spde/drift.hpp"
#include "spde/osgood.hpp"

namespace spde::osgood {

struct CheckResult {
    std::string check;
    bool pass = false;
    std::string witness; // concrete x/R location or empty when passing
    double value = 0.0;
};

struct NuFit {
    double t = 0.0;
    double nu = 0.0;        // fitted exponent in theta(t,x) <~ C exp(exp(x^nu))
    double log_C = 0.0;     // log of the fitted prefactor
    bool blew_up = false;
};

/// Divergence classification of int dx/h over the nested-log coordinate
/// ladder. Level 1 works in l = log x; each deeper level takes one more log.
struct OsgoodVerdict {
    bool divergent = false;
    bool conclusive = true;
    int level = 0;          // ladder level that decided
    double slope_lin = 0.0; // linear growth rate of phi at the deciding level
    double slope_log = 0.0; // log-slope of phi at the deciding level
    double H_xmax = 0.0;
    double H_total_est = 0.0; // finite-tail estimate when convergent at level 1
};

struct AuditReport {
    std::vector<CheckResult> checks;
    std::vector<NuFit> nu_fits;
    LipTrend lip_trend;
    OsgoodVerdict osgood;
    bool all_pass = false;
    std::string to_json() const;
};

struct AuditConfig {
    double alpha = 1.2;
    double eps = 0.5;      // Lip-over-log exponent offset
    double x_max = 1e8;
    double horizon = 1.0;  // adds a nu fit at t = 2T when 2T differs from {1,2}
    int grid_points = 48;
};

/// `T` may be null when the table is not constructible (1/h underflows for
/// the deepest nested-log members); the ladder classifier still decides.
OsgoodVerdict classify_osgood(const DriftSpec& d, const OsgoodTransform* T,
                              double x_max);

/// Full Assumption audit for a drift pair: positivity/monotonicity/convexity
/// of h, domination |f| <= h(|x|), sampled local Lipschitz bound, polynomial
/// envelope, Osgood divergence, double-exponential growth restriction with
/// fitted (nu_t, C_t), convexity of h_alpha on x >= 1, and the
/// L(R)/(log R)^{1+eps} trend. Failures are report entries with witnesses,
/// never exceptions.
AuditReport assumption_audit(const DriftSpec& d, const AuditConfig& cfg = {});

} // namespace spde::osgood
