#include "spde/drift.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spde::osgood {

namespace {

double log1p_exp(double t) {
    // log(1 + e^t), overflow-safe
    return t > 36.0 ? t : std::log1p(std::exp(t));
}

double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

} // namespace

double nested_log(int k, double x) {
    double v = x;
    for (int i = 0; i < k; ++i) {
        if (v <= 0.0) throw std::domain_error("nested_log: argument left domain");
        v = std::log(v);
    }
    return v;
}

TowerReal nested_exp(int k, double x) {
    TowerReal v = TowerReal::from(x);
    for (int i = 0; i < k; ++i) v = v.exp_();
    return v;
}

DriftSpec DriftSpec::iterated_log(int n, bool log_adjust) {
    if (n < 1) throw std::invalid_argument("iterated_log: n >= 1 required");
    DriftSpec d;
    d.family_ = DriftFamily::IteratedLog;
    d.n_ = n;
    d.log_adjust_ = log_adjust;
    TowerReal c = nested_exp(n, 1.0);
    d.offset_ = c.to_double(); // +inf for n >= 4; log-domain paths handle it
    d.name_ = "ilog" + std::to_string(n) + (log_adjust ? "+xlog" : "");
    d.poly_.p = 1.5;
    d.fit_poly_bound();
    return d;
}

DriftSpec DriftSpec::linear_test(double lambda, bool log_adjust) {
    DriftSpec d;
    d.family_ = DriftFamily::LinearTest;
    d.param_ = lambda;
    d.log_adjust_ = log_adjust;
    d.name_ = "linear(" + std::to_string(lambda) + ")" + (log_adjust ? "+xlog" : "");
    d.poly_.p = log_adjust ? 1.25 : 1.0;
    d.fit_poly_bound();
    return d;
}

DriftSpec DriftSpec::power_test(double delta) {
    if (delta <= 0.0) throw std::invalid_argument("power_test: delta > 0 required");
    DriftSpec d;
    d.family_ = DriftFamily::PowerTest;
    d.param_ = delta;
    d.name_ = "power(" + std::to_string(delta) + ")";
    d.poly_.p = 1.0 + delta;
    d.fit_poly_bound();
    return d;
}

DriftSpec DriftSpec::custom_table(std::vector<double> xs, std::vector<double> hs) {
    if (xs.size() != hs.size() || xs.size() < 2)
        throw std::invalid_argument("custom_table: need >= 2 matching samples");
    DriftSpec d;
    d.family_ = DriftFamily::CustomTable;
    d.name_ = "custom";
    for (size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < 0.0 || hs[i] <= 0.0)
            throw std::invalid_argument("custom_table: need x >= 0, h > 0");
        if (i > 0 && (xs[i] <= xs[i - 1] || hs[i] < hs[i - 1]))
            throw std::invalid_argument("custom_table: samples must increase");
        d.tab_logx_.push_back(std::log1p(xs[i]));
        d.tab_logh_.push_back(std::log(hs[i]));
    }
    d.poly_.p = 2.0;
    d.fit_poly_bound();
    return d;
}

double DriftSpec::log_h(double x) const {
    if (x < 0.0) throw std::domain_error("h: negative argument");
    double base;
    switch (family_) {
        case DriftFamily::IteratedLog: {
            if (n_ <= 3) {
                const double y = x + offset_;
                base = std::log(y);
                double v = y;
                for (int k = 1; k < n_; ++k) {
                    v = std::log(v);
                    base += std::log(v);
                }
            } else {
                // x + E_n(1) == E_n(1) to double precision for any double x
                TowerReal c = nested_exp(n_, 1.0);
                TowerReal lc = c.log_(); // E_{n-1}(1)
                base = lc.to_double();   // log(x+c); finite for n == 4
                double v = lc.to_double();
                for (int k = 1; k < n_; ++k) {
                    base += std::log(v);
                    v = std::log(v);
                }
            }
            break;
        }
        case DriftFamily::LinearTest:
            base = std::log(std::abs(param_)) + std::log1p(x);
            break;
        case DriftFamily::PowerTest:
            base = (1.0 + param_) * std::log1p(x);
            break;
        case DriftFamily::CustomTable: {
            const double lx = std::log1p(x);
            const auto& X = tab_logx_;
            const auto& H = tab_logh_;
            if (lx <= X.front()) {
                base = H.front();
            } else if (lx >= X.back()) {
                const size_t m = X.size();
                const double s = (H[m - 1] - H[m - 2]) / (X[m - 1] - X[m - 2]);
                base = H.back() + s * (lx - X.back());
            } else {
                const auto it = std::upper_bound(X.begin(), X.end(), lx);
                const size_t i = static_cast<size_t>(it - X.begin());
                const double w = (lx - X[i - 1]) / (X[i] - X[i - 1]);
                base = H[i - 1] + w * (H[i] - H[i - 1]);
            }
            break;
        }
        default:
            throw std::logic_error("unknown drift family");
    }
    if (log_adjust_ && x > 0.0) {
        const double adj = std::log(x) + std::log(std::log1p(x)); // log(x log(1+x))
        base = log_add_exp(base, adj);
    }
    return base;
}

double DriftSpec::h(double x) const {
    const double lh = log_h(x);
    return lh > 709.0 ? std::numeric_limits<double>::infinity() : std::exp(lh);
}

double DriftSpec::log_h_of_log_x(double ell) const {
    // log h(x) given ell = log x; exact below the double ceiling, asymptotic
    // above it (where the additive offsets are negligible anyway).
    if (ell < 700.0) return log_h(std::exp(ell));
    switch (family_) {
        case DriftFamily::IteratedLog: {
            double base = ell;
            double v = ell; // log(x + c) ~ ell
            for (int k = 1; k < n_; ++k) {
                base += std::log(v);
                v = std::log(v);
            }
            if (log_adjust_) base = log_add_exp(base, ell + std::log(ell));
            return base;
        }
        case DriftFamily::LinearTest: {
            double base = std::log(std::abs(param_)) + ell;
            if (log_adjust_) base = log_add_exp(base, ell + std::log(ell));
            return base;
        }
        case DriftFamily::PowerTest:
            return (1.0 + param_) * ell;
        case DriftFamily::CustomTable: {
            const auto& X = tab_logx_;
            const auto& H = tab_logh_;
            const size_t m = X.size();
            const double s = (H[m - 1] - H[m - 2]) / (X[m - 1] - X[m - 2]);
            return H.back() + s * (ell - X.back());
        }
    }
    throw std::logic_error("unknown drift family");
}

double DriftSpec::f(double x) const {
    const double ax = std::abs(x);
    switch (family_) {
        case DriftFamily::IteratedLog: {
            if (n_ <= 3) {
                double prod = 1.0;
                double v = ax + offset_;
                for (int k = 1; k < n_; ++k) {
                    v = std::log(v);
                    prod *= v;
                }
                return x * prod;
            }
            // n >= 4: the log factors are constant to double precision
            TowerReal lc = nested_exp(n_, 1.0).log_();
            double v = lc.to_double();
            double prod = 1.0;
            for (int k = 1; k < n_; ++k) {
                prod *= v;
                v = std::log(v);
            }
            return x * prod;
        }
        case DriftFamily::LinearTest:
            return param_ * x;
        case DriftFamily::PowerTest:
            return std::pow(1.0 + ax, 1.0 + param_);
        case DriftFamily::CustomTable:
            return x == 0.0 ? 0.0 : x * h(ax) / (ax + 1.0);
    }
    throw std::logic_error("unknown drift family");
}

double DriftSpec::log_abs_f(double x) const {
    const double ax = std::abs(x);
    if (ax == 0.0) {
        if (family_ == DriftFamily::PowerTest) return 0.0; // f(0) = 1
        return -std::numeric_limits<double>::infinity();
    }
    switch (family_) {
        case DriftFamily::IteratedLog: {
            double s = std::log(ax);
            if (n_ <= 3) {
                double v = ax + offset_;
                for (int k = 1; k < n_; ++k) {
                    v = std::log(v);
                    s += std::log(v);
                }
            } else {
                double v = nested_exp(n_, 1.0).log_().to_double();
                for (int k = 1; k < n_; ++k) {
                    s += std::log(v);
                    v = std::log(v);
                }
            }
            return s;
        }
        case DriftFamily::LinearTest:
            return std::log(std::abs(param_)) + std::log(ax);
        case DriftFamily::PowerTest:
            return (1.0 + param_) * std::log1p(ax);
        case DriftFamily::CustomTable:
            return std::log(ax) + log_h(ax) - std::log1p(ax);
    }
    throw std::logic_error("unknown drift family");
}

double DriftSpec::phi_tower(int level, double u) const {
    if (level < 1) throw std::invalid_argument("phi_tower: level >= 1");
    double base;
    switch (family_) {
        case DriftFamily::IteratedLog: {
            if (level == 1 && u < 700.0) {
                base = log_h(std::exp(u)) - u;
            } else {
                // phi_j(u) = sum_{i=1}^{n-j} L_i(u) (exact up to e^{-u} terms)
                base = 0.0;
                double v = u;
                for (int i = 1; i <= n_ - level; ++i) {
                    v = (i == 1) ? std::log(u) : std::log(v);
                    base += v;
                }
            }
            if (log_adjust_) {
                // x log(1+x) contributes phi_1 = log(l), 0 at deeper levels
                const double adj = (level == 1) ? std::log(u) : 0.0;
                base = log_add_exp(base, adj);
            }
            return base;
        }
        case DriftFamily::LinearTest: {
            base = std::log(std::abs(param_)) +
                   (level == 1 ? log1p_exp(-u) : 0.0);
            if (log_adjust_) base = log_add_exp(base, level == 1 ? std::log(u) : 0.0);
            return base;
        }
        case DriftFamily::PowerTest:
            if (level == 1) return (1.0 + param_) * log1p_exp(u) - u;
            return std::numeric_limits<double>::quiet_NaN(); // never consulted: level 1 decides
        case DriftFamily::CustomTable: {
            if (level == 1) return log_h_of_log_x(u) - u;
            if (level == 2 && u < 700.0) return phi_tower(1, std::exp(u)) - u;
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
    throw std::logic_error("unknown drift family");
}

double DriftSpec::lipschitz(double R) const {
    if (R < 0.0) throw std::domain_error("lipschitz: negative radius");
    switch (family_) {
        case DriftFamily::IteratedLog: {
            // closed-form derivative envelope n h_n(x)/x for x >= 1
            const double r = std::max(R, 1.0);
            const double lh = log_h(r);
            double env;
            if (lh <= 700.0) {
                env = static_cast<double>(n_) * std::exp(lh) / r;
            } else {
                // h/x overflows; |f'| = prod_k L_k(|x|+c) up to a factor (1+n)
                const double log_xc = std::isfinite(offset_)
                                          ? std::log(r + offset_)
                                          : nested_exp(n_, 1.0).log_().to_double();
                env = (1.0 + n_) * std::exp(lh - log_xc);
            }
            if (log_adjust_) env += std::log1p(r) + 1.0; // d/dx [x log(1+x)] bound
            return env;
        }
        case DriftFamily::LinearTest:
            return std::abs(param_);
        case DriftFamily::PowerTest:
            return (1.0 + param_) * std::pow(1.0 + R, param_);
        case DriftFamily::CustomTable: {
            if (R <= lip_cache_R_ && lip_cache_R_ <= R * 1.0000001)
                return lip_cache_L_;
            // dense |f'| scan; f is odd so [0, R] suffices
            const int m = 4096;
            const double dx = std::max(R, 1.0) / m;
            double best = 0.0;
            for (int i = 0; i < m; ++i) {
                const double x = (i + 0.5) * dx;
                const double d = (f(x + 0.5 * dx) - f(x - 0.5 * dx)) / dx;
                best = std::max(best, std::abs(d));
            }
            lip_cache_R_ = R;
            lip_cache_L_ = best;
            return best;
        }
    }
    throw std::logic_error("unknown drift family");
}

void DriftSpec::fit_poly_bound() {
    // C = max over a log grid of h(x) / (1 + x^p), with 5% headroom
    double best = -std::numeric_limits<double>::infinity();
    for (double lx = std::log(1e-6); lx < std::log(1e10); lx += 0.05) {
        const double x = std::exp(lx);
        const double v = log_h(x) - std::log1p(std::pow(x, poly_.p));
        best = std::max(best, v);
    }
    best = std::max(best, log_h(0.0));
    poly_.C = LogScalar::from_log(best + std::log(1.05));
}

double h_alpha(const DriftSpec& d, double alpha, double x) {
    if (alpha <= 1.0) throw std::invalid_argument("h_alpha: alpha > 1 required");
    const double xc = std::max(x, 1e-12);
    const double lh = d.log_h(std::pow(xc, alpha)) - (alpha - 1.0) * std::log(xc);
    return lh > 709.0 ? std::numeric_limits<double>::infinity() : std::exp(lh);
}

DriftEval eval_drift(const DriftSpec& d, DriftFn which, double x) {
    DriftEval out;
    switch (which) {
        case DriftFn::F: {
            out.value = d.f(x);
            out.log_value = LogScalar::from_log(d.log_abs_f(x));
            out.saturated = !std::isfinite(out.value);
            return out;
        }
        case DriftFn::H: {
            if (x < 0.0) throw std::domain_error("eval_drift: h needs x >= 0");
            out.log_value = LogScalar::from_log(d.log_h(x));
            out.saturated = out.log_value.saturated();
            out.value = out.saturated ? std::numeric_limits<double>::infinity()
                                      : out.log_value.value();
            return out;
        }
        case DriftFn::L: {
            if (x < 0.0) throw std::domain_error("eval_drift: L needs R >= 0");
            out.value = d.lipschitz(x);
            out.saturated = !std::isfinite(out.value);
            out.log_value = std::isfinite(out.value) && out.value > 0.0
                                ? LogScalar::from_value(out.value)
                                : LogScalar::from_log(d.log_h(std::max(x, 1.0)) -
                                                      std::log(std::max(x, 1.0)) +
                                                      std::log(std::max(1, d.ilog_n())));
            return out;
        }
    }
    throw std::logic_error("eval_drift: bad selector");
}

LipTrend lip_over_log_trend(const DriftSpec& d, double eps,
                            const std::vector<double>& radii) {
    LipTrend t;
    t.radii = radii;
    for (double R : radii) {
        const double denom = std::pow(std::log(std::max(R, 1.0 + 1e-9)), 1.0 + eps);
        t.ratios.push_back(d.lipschitz(R) / denom);
    }
    // decreasing over the last decade of the grid
    t.pass = t.ratios.size() >= 2;
    const double r_hi = t.radii.back();
    for (size_t i = 1; i < t.ratios.size(); ++i) {
        if (t.radii[i] >= 0.1 * r_hi && t.ratios[i] >= t.ratios[i - 1])
            t.pass = false;
    }
    return t;
}

} // namespace spde::osgood
