#include "spde/osgood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spde/quadrature.hpp"

namespace spde::osgood {

OsgoodTransform::OsgoodTransform(DriftSpec drift, TransformConfig cfg)
    : drift_(std::move(drift)), cfg_(cfg) {
    if (cfg_.x_max <= cfg_.x_min)
        throw std::invalid_argument("OsgoodTransform: x_max must exceed x_min");
    const double decades = std::log10(cfg_.x_max / cfg_.x_min);
    const int panels = std::max(8, static_cast<int>(decades * cfg_.nodes_per_decade));
    const double dt = (std::log(cfg_.x_max) - std::log(cfg_.x_min)) / panels;

    auto inv_h = [this](double y) { return std::exp(-drift_.log_h(y)); };

    x_.reserve(panels + 1);
    for (int i = 0; i <= panels; ++i)
        x_.push_back(std::exp(std::log(cfg_.x_min) + i * dt));
    x_.back() = cfg_.x_max;

    H_.resize(x_.size());
    t_.resize(x_.size());
    dHdt_.resize(x_.size());

    // head [0, x_min]
    double acc = integrate_or_throw(inv_h, 0.0, x_.front(), cfg_.panel_abs_tol,
                                    cfg_.panel_rel_tol);
    H_[0] = acc;
    for (size_t i = 1; i < x_.size(); ++i) {
        const QuadResult q =
            integrate(inv_h, x_[i - 1], x_[i], cfg_.panel_abs_tol, cfg_.panel_rel_tol);
        if (!q.converged)
            throw std::runtime_error("OsgoodTransform: quadrature stalled on [" +
                                     std::to_string(q.worst_lo) + ", " +
                                     std::to_string(q.worst_hi) + "]");
        acc += q.value;
        H_[i] = acc;
        if (H_[i] <= H_[i - 1])
            throw std::runtime_error("OsgoodTransform: H not strictly increasing");
    }
    for (size_t i = 0; i < x_.size(); ++i) {
        t_[i] = std::log(x_[i]);
        dHdt_[i] = x_[i] * inv_h(x_[i]); // dH/d(log x)
    }
}

double OsgoodTransform::hermite(double x, size_t i) const {
    const double t = std::log(x);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * H_[i] + h10 * h * dHdt_[i] + h01 * H_[i + 1] + h11 * h * dHdt_[i + 1];
}

double OsgoodTransform::eval(double x) const {
    if (x < 0.0) throw std::domain_error("OsgoodTransform::eval: x < 0");
    if (x == 0.0) return 0.0;
    if (x < x_.front()) {
        auto inv_h = [this](double y) { return std::exp(-drift_.log_h(y)); };
        return integrate(inv_h, 0.0, x, cfg_.panel_abs_tol, cfg_.panel_rel_tol).value;
    }
    if (x > x_.back() * (1.0 + 1e-12))
        throw std::out_of_range("OsgoodTransform::eval: x above tabulated range [0, " +
                                std::to_string(x_.back()) + "]");
    if (x >= x_.back()) return H_.back();
    const double t = std::log(x);
    size_t i = static_cast<size_t>((t - t_.front()) / (t_[1] - t_[0]));
    i = std::min(i, x_.size() - 2);
    while (i > 0 && t < t_[i]) --i;
    while (i + 2 < x_.size() && t > t_[i + 1]) ++i;
    return hermite(x, i);
}

double OsgoodTransform::inverse(double y) const {
    if (y < 0.0) throw std::domain_error("OsgoodTransform::inverse: y < 0");
    if (y == 0.0) return 0.0;
    if (y > H_.back())
        throw std::out_of_range("OsgoodTransform::inverse: y above H(x_max) = " +
                                std::to_string(H_.back()));
    // bracket on the node table
    const auto it = std::lower_bound(H_.begin(), H_.end(), y);
    size_t i = static_cast<size_t>(it - H_.begin());
    double lo, hi;
    if (i == 0) {
        lo = 0.0;
        hi = x_.front();
    } else {
        lo = x_[i - 1];
        hi = x_[i];
    }
    // bisect to ~1e-3 relative, then Newton with H' = 1/h
    for (int k = 0; k < 12 && (hi - lo) > 1e-3 * (1.0 + lo); ++k) {
        const double mid = 0.5 * (lo + hi);
        (eval(mid) < y ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int k = 0; k < 60; ++k) {
        const double r = eval(x) - y;
        (r < 0.0 ? lo : hi) = x;
        const double step = -r * std::exp(drift_.log_h(x)); // -r / H'(x)
        double xn = x + step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) <= 1e-15 * (1.0 + std::abs(x))) {
            x = xn;
            break;
        }
        x = xn;
    }
    return x;
}

FlowValue OsgoodTransform::inverse_extended(double y) const {
    FlowValue out;
    if (y <= H_.back()) {
        out.value = inverse(y);
        out.log_value = LogScalar::from_log(out.value > 0.0 ? std::log(out.value)
                                                            : -1e300);
        return out;
    }
    // continue H in ell = log x: dH/dell = exp(ell - log h(e^ell))
    double ell = std::log(x_.back());
    double acc = H_.back();
    auto slope = [this](double l) {
        const double e = l - drift_.log_h_of_log_x(l);
        return e < -745.0 ? 0.0 : std::exp(e);
    };
    double g = slope(ell);
    for (long guard = 0; guard < 2000000; ++guard) {
        if (g <= 1e-300) { // integral effectively stalled: h grows too fast
            out.saturated = true;
            out.log_value = LogScalar::from_log(std::numeric_limits<double>::infinity());
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
        // step sized so the increment resolves the remaining gap
        double dl = std::min(0.5, 0.02 * (y - acc) / g);
        dl = std::max(dl, 1e-9);
        const double g2 = slope(ell + dl);
        const double inc = 0.5 * (g + g2) * dl;
        if (acc + inc >= y) {
            // local Newton inside [ell, ell+dl]
            double l = ell + dl * (y - acc) / inc;
            for (int k = 0; k < 25; ++k) {
                const double gg = slope(l);
                const double Hl = acc + 0.5 * (g + gg) * (l - ell);
                const double step = (y - Hl) / gg;
                l += step;
                if (std::abs(step) < 1e-12 * (1.0 + std::abs(l))) break;
            }
            out.log_value = LogScalar::from_log(l);
            out.saturated = l > 709.0;
            out.value = out.saturated ? std::numeric_limits<double>::infinity()
                                      : std::exp(l);
            return out;
        }
        acc += inc;
        ell += dl;
        g = g2;
        if (ell > 1e307) {
            out.saturated = true;
            out.log_value = LogScalar::from_log(std::numeric_limits<double>::infinity());
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
    }
    throw std::runtime_error("inverse_extended: iteration guard exceeded");
}

FlowValue OsgoodTransform::flow(double t, double x) const {
    if (t < 0.0) throw std::domain_error("flow: t >= 0 required");
    if (x < 0.0) throw std::domain_error("flow: x >= 0 required");
    if (t == 0.0) return FlowValue{x, LogScalar::from_log(x > 0 ? std::log(x) : -1e300), false};
    return inverse_extended(eval(x) + t);
}

OdeResult flow_ode_oracle(const DriftSpec& d, double t, double x, double rel_tol,
                          double abs_tol) {
    if (t < 0.0) throw std::domain_error("flow_ode_oracle: t >= 0 required");
    OdeResult res;
    if (t == 0.0) {
        res.value = x;
        res.reached_time = 0.0;
        return res;
    }
    // Cash-Karp tableau
    static const double a2 = 0.2, a3 = 0.3, a4 = 0.6, a5 = 1.0, a6 = 0.875;
    static const double b21 = 0.2;
    static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
    static const double b41 = 0.3, b42 = -0.9, b43 = 1.2;
    static const double b51 = -11.0 / 54, b52 = 2.5, b53 = -70.0 / 27, b54 = 35.0 / 27;
    static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                        b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
    static const double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594,
                        c6 = 512.0 / 1771;
    static const double d1 = c1 - 2825.0 / 27648, d3 = c3 - 18575.0 / 48384,
                        d4 = c4 - 13525.0 / 55296, d5 = -277.0 / 14336,
                        d6 = c6 - 0.25;
    (void)a2; (void)a3; (void)a4; (void)a5; (void)a6;

    auto rhs = [&d](double y) { return d.h(std::max(y, 0.0)); };

    double y = x, s = 0.0;
    double dt = std::min(t, 1e-3 / (1.0 + rhs(x) / (1.0 + std::abs(x))));
    const double y_cap = 1e300;
    for (long it = 0; it < 20000000; ++it) {
        if (s >= t) break;
        dt = std::min(dt, t - s);
        const double k1 = rhs(y);
        const double k2 = rhs(y + dt * b21 * k1);
        const double k3 = rhs(y + dt * (b31 * k1 + b32 * k2));
        const double k4 = rhs(y + dt * (b41 * k1 + b42 * k2 + b43 * k3));
        const double k5 = rhs(y + dt * (b51 * k1 + b52 * k2 + b53 * k3 + b54 * k4));
        const double k6 =
            rhs(y + dt * (b61 * k1 + b62 * k2 + b63 * k3 + b64 * k4 + b65 * k5));
        const double y5 = y + dt * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
        const double err =
            std::abs(dt * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6));
        const double tol = abs_tol + rel_tol * std::max(std::abs(y), std::abs(y5));
        if (!std::isfinite(y5) || y5 > y_cap) {
            res.blew_up = true;
            res.reached_time = s;
            res.value = std::numeric_limits<double>::infinity();
            res.steps = it;
            return res;
        }
        if (err <= tol) {
            y = y5;
            s += dt;
            ++res.steps;
        }
        const double grow = (err > 0.0) ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
        dt *= std::clamp(grow, 0.2, 5.0);
        if (dt < 1e-16 * (1.0 + s)) {
            res.blew_up = true; // step underflow near blow-up
            res.reached_time = s;
            res.value = y;
            return res;
        }
    }
    res.value = y;
    res.reached_time = s;
    return res;
}

AlphaScaledDrift::AlphaScaledDrift(double alpha,
                                   std::shared_ptr<const OsgoodTransform> base)
    : alpha_(alpha), base_(std::move(base)) {
    if (alpha_ <= 1.0) throw std::invalid_argument("AlphaScaledDrift: alpha > 1");
    if (!base_) throw std::invalid_argument("AlphaScaledDrift: null transform");
}

double AlphaScaledDrift::H_alpha(double x) const {
    if (x < 0.0) throw std::domain_error("H_alpha: x >= 0 required");
    return base_->eval(std::pow(x, alpha_)) / alpha_;
}

double AlphaScaledDrift::H_alpha_inv(double y) const {
    return std::pow(base_->inverse(alpha_ * y), 1.0 / alpha_);
}

FlowValue AlphaScaledDrift::H_alpha_inv_extended(double y) const {
    FlowValue v = base_->inverse_extended(alpha_ * y);
    FlowValue out;
    out.log_value = LogScalar::from_log(v.log_value.log_value / alpha_);
    out.saturated = out.log_value.saturated();
    out.value = out.saturated ? std::numeric_limits<double>::infinity()
                              : out.log_value.value();
    return out;
}

double AlphaScaledDrift::flow_alpha(double t, double x) const {
    if (t == 0.0) return x;
    return H_alpha_inv(H_alpha(x) + t);
}

double AlphaScaledDrift::H_alpha_direct(double x, double abs_tol, double rel_tol) const {
    const DriftSpec& d = drift();
    const double a = alpha_;
    auto inv_ha = [&](double y) {
        const double yc = std::max(y, 1e-300);
        return std::exp((a - 1.0) * std::log(yc) - d.log_h(std::pow(yc, a)));
    };
    return integrate_or_throw(inv_ha, 0.0, x, abs_tol, rel_tol);
}

double convexity_split_residual(const DriftSpec& d, double alpha, double rho,
                                double q) {
    if (rho <= 0.0 || q <= 0.0)
        throw std::domain_error("convexity_split: rho, q > 0 required");
    const double beta = alpha / (alpha - 1.0);
    return q * h_alpha(d, alpha, rho) + rho * h_alpha(d, beta, q) - d.h(rho * q);
}

double convexity_split_scale(const DriftSpec& d, double alpha, double rho,
                             double q) {
    const double beta = alpha / (alpha - 1.0);
    return std::max({q * h_alpha(d, alpha, rho), rho * h_alpha(d, beta, q),
                     d.h(rho * q)});
}

FamilyValue iterated_family(int n, FamilyFn fn, double t, double x) {
    if (n < 1) throw std::invalid_argument("iterated_family: n >= 1");
    FamilyValue out;
    switch (fn) {
        case FamilyFn::Lk: {
            out.value = nested_log(n, x);
            out.tower = TowerReal::from(out.value);
            return out;
        }
        case FamilyFn::Ek: {
            out.tower = nested_exp(n, x);
            out.value = out.tower.to_double();
            out.representable = std::isfinite(out.value);
            return out;
        }
        case FamilyFn::Hfn: {
            const DriftSpec d = DriftSpec::iterated_log(n);
            out.value = d.h(x);
            out.representable = std::isfinite(out.value);
            out.tower = TowerReal::from(std::isfinite(out.value) ? out.value : 0.0);
            if (!out.representable) {
                TowerReal lg = TowerReal::from(d.log_h(x));
                out.tower = lg.exp_();
            }
            return out;
        }
        case FamilyFn::Hn: {
            // H_n(x) = L_n(x + E_n(1)) - 1
            if (n <= 3) {
                const double c = nested_exp(n, 1.0).to_double();
                out.value = nested_log(n, x + c) - 1.0;
            } else {
                // x + E_n(1) == E_n(1) in doubles; H_n(x) underflows to 0
                out.value = 0.0;
            }
            out.tower = TowerReal::from(std::max(out.value, 0.0));
            return out;
        }
        case FamilyFn::ThetaN: {
            if (x < 0.0) throw std::domain_error("theta_n: x >= 0");
            if (t == 0.0) { // exact identity
                out.value = x;
                out.tower = TowerReal::from(x);
                return out;
            }
            // E_n(L_n(x + E_n(1)) + t) - E_n(1)
            double Ln;
            if (n <= 3) {
                const double c = nested_exp(n, 1.0).to_double();
                Ln = nested_log(n, x + c);
            } else {
                Ln = 1.0; // L_n(x + E_n(1)) to double precision
            }
            TowerReal big = nested_exp(n, Ln + t);
            TowerReal c = nested_exp(n, 1.0);
            const double bd = big.to_double();
            if (std::isfinite(bd)) {
                const double cd = c.to_double();
                out.value = bd - (std::isfinite(cd) ? cd : 0.0);
                out.tower = TowerReal::from(out.value);
            } else {
                // subtraction of E_n(1) is negligible at tower scale
                out.tower = big;
                out.value = bd;
                out.representable = false;
            }
            return out;
        }
    }
    throw std::logic_error("iterated_family: bad selector");
}

namespace {
// s-coordinate of the counterexample interpolant
double probe_s(double x) { return std::log(std::log(x + std::exp(kE))); }

struct ProbeNodes {
    double s1, s2; // s(x_1), s(x_2)
    double x2;
};
ProbeNodes probe_nodes() {
    ProbeNodes p;
    p.x2 = nested_exp(3, 1.0).to_double(); // exp(exp(e))
    p.s1 = probe_s(1.0);
    p.s2 = probe_s(p.x2);
    return p;
}
} // namespace

double counterexample_H(double x) {
    const ProbeNodes p = probe_nodes();
    if (x < 1.0 || x > p.x2)
        throw std::out_of_range("counterexample_H: x outside [x_1, x_2]");
    return 1.0 + (probe_s(x) - p.s1) / (p.s2 - p.s1);
}

double counterexample_H_inverse(double y) {
    const ProbeNodes p = probe_nodes();
    if (y < 1.0 || y > 2.0)
        throw std::out_of_range("counterexample_H_inverse: y outside [1, 2]");
    const double s = p.s1 + (y - 1.0) * (p.s2 - p.s1);
    return std::exp(std::exp(s)) - std::exp(kE);
}

CounterexampleProbe counterexample_probe(int n, double nu) {
    if (n < 1) throw std::invalid_argument("counterexample_probe: n >= 1");
    CounterexampleProbe out;
    out.n = n;
    // ladder x_1 = 1, x_{k+1} = E_3(x_k)
    TowerReal x = TowerReal::from(1.0);
    for (int k = 1; k < n; ++k) x = x.exp_().exp_().exp_();
    out.x_n = x;
    // H(x_n) = n by construction; H^{-1}(n + 1) = x_{n+1}
    out.x_next = x.exp_().exp_().exp_();
    if (n == 1) {
        // check against the constructed interpolant on the representable window
        const double from_interp = counterexample_H_inverse(2.0);
        out.x_next = TowerReal::from(from_interp);
    }
    // ratio_loglog = log( log x_{n+1} - exp(x_n^nu) )
    TowerReal A = out.x_next.log_();          // log x_{n+1} = E_2(x_n)
    TowerReal B = out.x_n.pow_(nu).exp_();    // exp(x_n^nu)
    if (A.depth == 0 && B.depth == 0) {
        const double diff = A.top - B.top;
        if (diff <= 0.0)
            throw std::runtime_error("counterexample_probe: violation ratio <= 1");
        out.ratio_loglog = TowerReal::from(std::log(diff));
    } else {
        if (!(B < A))
            throw std::runtime_error("counterexample_probe: violation ratio <= 1");
        out.ratio_loglog = A.log_(); // relative error exp(-huge)
    }
    out.capped = !out.ratio_loglog.representable() || !out.x_n.representable();
    return out;
}

} // namespace spde::osgood
