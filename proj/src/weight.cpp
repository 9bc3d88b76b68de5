#include "spde/weight.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spde/rng.hpp"

namespace spde::weight {

double StaticWeight::value(const double* x) const {
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) r2 += x[i] * x[i];
    return std::sqrt(std::log(kE + r2));
}

void StaticWeight::gradient(const double* x, double* out) const {
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) r2 += x[i] * x[i];
    const double phi = kE + r2;
    const double g = std::log(phi);
    const double c = 1.0 / (phi * std::sqrt(g));
    for (int i = 0; i < dim; ++i) out[i] = c * x[i];
}

double StaticWeight::laplacian(const double* x) const {
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) r2 += x[i] * x[i];
    const double phi = kE + r2;
    const double g = std::log(phi);
    const double sg = std::sqrt(g);
    return dim / (phi * sg) - 2.0 * r2 / (phi * phi * sg) -
           r2 / (phi * phi * g * sg);
}

double StaticWeight::sup_abs_laplacian() const {
    // |Laplacian| is maximal at the origin (value d/e); confirmed by scan
    double best = std::abs(dim / kE);
    for (double r = 1e-3; r < 1e6; r *= 1.05) {
        double x[2] = {r, 0.0};
        best = std::max(best, std::abs(laplacian(x)));
    }
    return best;
}

DynamicWeight::DynamicWeight(osgood::AlphaScaledDrift scaled, int dim,
                             double horizon, EstimatorConfig est)
    : scaled_(std::move(scaled)), dim_(dim), horizon_(horizon), est_(est),
      rho0_{dim}, gh_(gauss_hermite(est.gh_nodes)),
      gh_half_(gauss_hermite(std::max(8, est.gh_nodes / 2))) {
    if (dim_ < 1 || dim_ > 2)
        throw std::invalid_argument("DynamicWeight: Gauss-Hermite path supports d <= 2");
    if (horizon_ <= 0.0) throw std::invalid_argument("DynamicWeight: horizon > 0");
}

DynamicWeight DynamicWeight::make(const osgood::DriftSpec& drift, double alpha,
                                  int dim, double horizon, EstimatorConfig est) {
    using namespace osgood;
    TransformConfig tc;
    auto base = std::make_shared<OsgoodTransform>(drift, tc);
    // required H-range: H(rho_max^alpha) + alpha (horizon + slack)
    const double rho_max = std::sqrt(std::log(kE + 1e12)); // generous |x| headroom
    const double y_req =
        base->eval(std::pow(rho_max, alpha)) + alpha * (horizon + 1.0);
    if (y_req > base->range_max()) {
        FlowValue probe = base->inverse_extended(y_req);
        const double log_needed = probe.log_value.log_value;
        if (!std::isfinite(log_needed) || log_needed > std::log(1e280))
            throw std::runtime_error(
                "DynamicWeight: flow range not representable over this horizon");
        tc.x_max = std::exp(std::min(log_needed + 2.3, std::log(1e290)));
        base = std::make_shared<OsgoodTransform>(drift, tc);
    }
    return DynamicWeight(AlphaScaledDrift(alpha, std::move(base)), dim, horizon, est);
}

double DynamicWeight::integrand(double t, const double* y) const {
    return scaled_.flow_alpha(t, rho0_.value(y));
}

double DynamicWeight::gh_estimate(double t, const double* x, int which) const {
    const GaussHermite& gh = which == 0 ? gh_ : gh_half_;
    const double s = std::sqrt(2.0 * t);
    if (dim_ == 1) {
        double acc = 0.0;
        for (size_t i = 0; i < gh.nodes.size(); ++i) {
            const double y = x[0] + s * gh.nodes[i];
            acc += gh.weights[i] * integrand(t, &y);
        }
        return acc / kSqrtPi;
    }
    double acc = 0.0;
    for (size_t i = 0; i < gh.nodes.size(); ++i) {
        for (size_t j = 0; j < gh.nodes.size(); ++j) {
            const double y[2] = {x[0] + s * gh.nodes[i], x[1] + s * gh.nodes[j]};
            acc += gh.weights[i] * gh.weights[j] * integrand(t, y);
        }
    }
    return acc / (kSqrtPi * kSqrtPi);
}

double DynamicWeight::estimate(double t, const double* x) const {
    if (est_.kind == EstimatorConfig::Kind::MonteCarlo) {
        McEstimate e = rho_mc(t, x, est_.mc_paths, est_.mc_seed);
        if (e.se > est_.mc_se_tol)
            throw std::runtime_error(
                "DynamicWeight: MC standard error " + std::to_string(e.se) +
                " above tolerance; increase mc_paths");
        return e.mean;
    }
    return gh_estimate(t, x, 0);
}

double DynamicWeight::rho(double t, const double* x) const {
    if (t < 0.0 || t > horizon_ + 1e-9)
        throw std::domain_error("DynamicWeight::rho: t outside [0, T]");
    if (t == 0.0) return rho0_.value(x); // degenerate Gaussian
    return estimate(t, x);
}

DynamicWeight::McEstimate DynamicWeight::rho_mc(double t, const double* x,
                                                int paths, uint64_t seed) const {
    if (t == 0.0) return {rho0_.value(x), 0.0, paths};
    CounterRng rng(seed);
    const double s = std::sqrt(t);
    const int pairs = std::max(1, paths / 2);
    double sum = 0.0, sum2 = 0.0;
    for (int j = 0; j < pairs; ++j) {
        double g[2] = {0.0, 0.0};
        auto [a, b] = rng.normal_pair(0xB0, static_cast<uint64_t>(j));
        g[0] = a;
        if (dim_ == 2) g[1] = b;
        double yp[2], ym[2];
        for (int k = 0; k < dim_; ++k) {
            yp[k] = x[k] + s * g[k];
            ym[k] = x[k] - s * g[k];
        }
        const double v = 0.5 * (integrand(t, yp) + integrand(t, ym));
        sum += v;
        sum2 += v * v;
    }
    McEstimate e;
    e.paths = 2 * pairs;
    e.mean = sum / pairs;
    const double var = std::max(0.0, sum2 / pairs - e.mean * e.mean);
    e.se = std::sqrt(var / pairs);
    return e;
}

ResidualReport DynamicWeight::supersolution_residual(double t, const double* x,
                                                     double dt_step,
                                                     double dx_step) const {
    if (t <= 0.0 || t >= horizon_)
        throw std::domain_error("supersolution_residual: t in (0, T) required");
    ResidualReport r;
    const double dt = std::min(dt_step, 0.45 * std::min(t, horizon_ - t));

    auto rho_at = [&](double tt, const double* xx) { return estimate(tt, xx); };

    // time derivative, centered, with Richardson halving
    auto ddt = [&](double step) {
        return (rho_at(t + step, x) - rho_at(t - step, x)) / (2.0 * step);
    };
    const double d1 = ddt(dt), d2 = ddt(0.5 * dt);
    r.drho_dt = d2 + (d2 - d1) / 3.0;
    double trunc = std::abs(d2 - d1) / 3.0;

    // Laplacian, centered per axis, Richardson
    auto lap = [&](double step) {
        double acc = 0.0;
        const double c = rho_at(t, x);
        for (int k = 0; k < dim_; ++k) {
            double xp[2] = {x[0], dim_ > 1 ? x[1] : 0.0};
            double xm[2] = {x[0], dim_ > 1 ? x[1] : 0.0};
            xp[k] += step;
            xm[k] -= step;
            acc += (rho_at(t, xp) - 2.0 * c + rho_at(t, xm)) / (step * step);
        }
        return acc;
    };
    const double l1 = lap(dx_step), l2 = lap(0.5 * dx_step);
    r.lap_rho = l2 + (l2 - l1) / 3.0;
    trunc += std::abs(l2 - l1) / 3.0;

    r.rho = rho_at(t, x);
    r.h_alpha_rho = scaled_.h_alpha(r.rho);
    r.residual = r.drho_dt - 0.5 * r.lap_rho - r.h_alpha_rho;
    r.trunc_err = trunc;

    // estimator noise, amplified through the difference stencils
    double quad_noise;
    if (est_.kind == EstimatorConfig::Kind::GaussHermite) {
        quad_noise = std::abs(gh_estimate(t, x, 0) - gh_estimate(t, x, 1));
        quad_noise = std::max(quad_noise, 1e-14 * (1.0 + std::abs(r.rho)));
    } else {
        quad_noise = rho_mc(t, x, est_.mc_paths, est_.mc_seed).se * 3.0;
    }
    r.est_err = quad_noise * (1.0 / dt + 2.0 * dim_ / (dx_step * dx_step) + 1.0);
    r.budget = 2.0 * r.trunc_err + r.est_err;

    if (r.residual < -r.budget)
        r.status = ResidualReport::Status::Fail;
    else if (r.budget <= 0.05 * (1.0 + std::abs(r.drho_dt)))
        r.status = ResidualReport::Status::Pass;
    else
        r.status = ResidualReport::Status::Inconclusive;
    return r;
}

std::vector<double> DynamicWeight::dominance_ratio(
    double t, const std::vector<double>& radii) const {
    std::vector<double> out;
    out.reserve(radii.size());
    for (double r : radii) {
        double x[2] = {r, 0.0};
        out.push_back(rho(t, x) / rho0_.value(x));
    }
    return out;
}

double DynamicWeight::fit_exponential_envelope(
    const std::vector<double>& ts, const std::vector<double>& radii) const {
    double C = 0.0;
    for (double t : ts) {
        for (double r : radii) {
            double x[2] = {r, 0.0};
            C = std::max(C, rho(t, x) * std::exp(-(std::abs(r) + t)));
        }
    }
    return C;
}

std::vector<WeightFieldRow> sample_weight_field(const DynamicWeight& w,
                                                const std::vector<double>& ts,
                                                const std::vector<double>& xs) {
    std::vector<WeightFieldRow> rows;
    for (double t : ts) {
        for (double x : xs) {
            WeightFieldRow row;
            row.t = t;
            row.x[0] = x;
            double xv[2] = {x, 0.0};
            row.rho = w.rho(t, xv);
            if (t > 0.0 && t < w.horizon()) {
                ResidualReport rr = w.supersolution_residual(t, xv);
                row.drho_dt = rr.drho_dt;
                row.lap_rho = rr.lap_rho;
                row.residual = rr.residual;
                row.budget = rr.budget;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

SupDerivReport sup_left_derivative_check(const TimeSlices& f, size_t ti,
                                         double tol) {
    if (ti == 0 || ti >= f.ts.size())
        throw std::invalid_argument("sup_left_derivative_check: need left history");
    const size_t nx = f.xs.size();
    SupDerivReport rep;

    auto sup_of = [&](size_t k, size_t* arg) {
        double best = -std::numeric_limits<double>::infinity();
        size_t bi = 0;
        for (size_t i = 0; i < nx; ++i)
            if (f.v[k][i] > best) {
                best = f.v[k][i];
                bi = i;
            }
        if (arg) *arg = bi;
        return best;
    };

    size_t ai = 0;
    const double sup_t = sup_of(ti, &ai);
    const double sup_prev = sup_of(ti - 1, nullptr);
    const double h = f.ts[ti] - f.ts[ti - 1];
    rep.lhs = (sup_t - sup_prev) / h;
    rep.argmax_x = f.xs[ai];

    if (ai == 0 || ai + 1 == nx) { // maximizer on the boundary: C_0 violated
        rep.conclusive = false;
        return rep;
    }
    if (ti + 1 < f.ts.size()) {
        rep.rhs = (f.v[ti + 1][ai] - f.v[ti - 1][ai]) / (f.ts[ti + 1] - f.ts[ti - 1]);
    } else {
        rep.rhs = (f.v[ti][ai] - f.v[ti - 1][ai]) / h;
    }
    rep.pass = rep.lhs <= rep.rhs + tol;
    return rep;
}

} // namespace spde::weight
