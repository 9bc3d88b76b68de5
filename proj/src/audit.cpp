#include "spde/audit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "spde/rng.hpp"

namespace spde::osgood {

namespace {

// Sign proxy for h'' at x from g = log h: h'' = h (g'' + g'^2).
struct ConvexitySample {
    double proxy;
    double tol;
};

ConvexitySample log_convexity_proxy(const std::function<double(double)>& logf,
                                    double x) {
    const double d = 1e-3 * x;
    const double gm = logf(x - d), g0 = logf(x), gp = logf(x + d);
    const double g1 = (gp - gm) / (2.0 * d);
    const double g2 = (gp - 2.0 * g0 + gm) / (d * d);
    ConvexitySample s;
    s.proxy = g2 + g1 * g1;
    const double noise = 16.0 * 2.3e-16 * (1.0 + std::abs(g0)) / (d * d);
    s.tol = 1e-9 * (std::abs(g2) + g1 * g1 + 1e-300) + noise;
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

} // namespace

OsgoodVerdict classify_osgood(const DriftSpec& d, const OsgoodTransform* T,
                              double x_max) {
    OsgoodVerdict v;
    v.H_xmax = T ? T->range_max() : 0.0;
    const double u0 = 100.0;
    for (int level = 1; level <= 6; ++level) {
        const double p0 = d.phi_tower(level, u0);
        const double p1 = d.phi_tower(level, kE * u0);
        const double p2 = d.phi_tower(level, 2.0 * u0);
        if (!std::isfinite(p0) || !std::isfinite(p1) || !std::isfinite(p2)) {
            v.conclusive = false;
            v.level = level;
            return v;
        }
        const double a = (p2 - p0) / u0;     // linear rate
        const double b = p1 - p0;            // slope per e-fold of u
        v.level = level;
        v.slope_lin = a;
        v.slope_log = b;
        if (a > 0.02) {
            // exponential tail in this coordinate: integral converges
            v.divergent = false;
            if (level == 1) {
                const double l0 = std::log(x_max);
                const double phi0 = d.phi_tower(1, l0);
                v.H_total_est = v.H_xmax + std::exp(-phi0) / a;
            } else {
                v.H_total_est = v.H_xmax;
            }
            return v;
        }
        if (b >= 1.02) { // phi ~ b log u with b > 1: convergent (Bertrand)
            v.divergent = false;
            v.H_total_est = v.H_xmax;
            return v;
        }
        if (b <= 0.98) { // phi grows slower than log u: divergent
            v.divergent = true;
            return v;
        }
        // b within [0.98, 1.02]: borderline log; climb one coordinate level
    }
    v.conclusive = false;
    return v;
}

AuditReport assumption_audit(const DriftSpec& d, const AuditConfig& cfg) {
    AuditReport rep;
    auto add = [&rep](std::string name, bool pass, std::string witness, double value) {
        rep.checks.push_back({std::move(name), pass, std::move(witness), value});
    };

    // sample grid, log-spaced over [1e-3, x_max] plus 0
    std::vector<double> grid;
    for (int i = 0; i <= cfg.grid_points; ++i) {
        const double lx = std::log(1e-3) +
                          i * (std::log(cfg.x_max) - std::log(1e-3)) / cfg.grid_points;
        grid.push_back(std::exp(lx));
    }

    // h positive / nondecreasing / convex
    {
        bool pass = true;
        std::string wit;
        double worst = 0.0;
        double prev = d.log_h(0.0);
        if (!std::isfinite(prev)) {
            pass = false;
            wit = "log h(0) not finite";
        }
        for (double x : grid) {
            const double lh = d.log_h(x);
            if (lh + 1e-12 < prev) {
                pass = false;
                wit = "h decreasing at x=" + fmt(x);
                worst = x;
                break;
            }
            prev = lh;
            const auto c = log_convexity_proxy([&](double y) { return d.log_h(y); }, x);
            if (c.proxy < -c.tol) {
                pass = false;
                wit = "h concave at x=" + fmt(x) + " (proxy " + fmt(c.proxy) + ")";
                worst = x;
                break;
            }
        }
        add("h-positive-increasing-convex", pass, wit, worst);
    }

    // |f(x)| <= h(|x|)
    {
        bool pass = true;
        std::string wit;
        double worst = 0.0;
        for (double x : grid) {
            for (double s : {-1.0, 1.0}) {
                const double lf = d.log_abs_f(s * x);
                const double lh = d.log_h(x);
                if (lf > lh + 1e-12) {
                    pass = false;
                    wit = "x=" + fmt(s * x) + " log|f|-log h=" + fmt(lf - lh);
                    worst = s * x;
                }
            }
        }
        add("dominates", pass, wit, worst);
    }

    // sampled local Lipschitz bound
    {
        bool pass = true;
        std::string wit;
        double worst = 0.0;
        CounterRng rng(0x11d5u);
        for (double R : {1.0, 10.0, 100.0}) {
            const double L = d.lipschitz(R);
            if (!std::isfinite(L)) continue; // log-domain families: envelope only
            for (int k = 0; k < 256; ++k) {
                auto [g1, g2] = rng.normal_pair(static_cast<uint64_t>(R), k);
                const double u1 = R * std::tanh(g1);
                const double u2 = R * std::tanh(g2);
                const double lhs = std::abs(d.f(u1) - d.f(u2));
                if (lhs > L * std::abs(u1 - u2) * (1.0 + 1e-10) + 1e-14) {
                    pass = false;
                    wit = "R=" + fmt(R) + " u1=" + fmt(u1) + " u2=" + fmt(u2);
                    worst = R;
                }
            }
        }
        add("local-lipschitz", pass, wit, worst);
    }

    // polynomial envelope: log-log slope <= p and h <= C (1 + x^p)
    {
        const PolyBound& pb = d.poly_bound();
        bool pass = true;
        std::string wit;
        const double xh = cfg.x_max, xl = cfg.x_max / 100.0;
        const double slope =
            (d.log_h(xh) - d.log_h(xl)) / (std::log(xh) - std::log(xl));
        if (slope > pb.p + 1e-6) {
            pass = false;
            wit = "tail slope " + fmt(slope) + " exceeds p=" + fmt(pb.p);
        }
        for (double x : grid) {
            const double bound = pb.C.log_value + std::log1p(std::pow(x, pb.p));
            if (d.log_h(x) > bound + 1e-9) {
                pass = false;
                wit = "h above C(1+x^p) at x=" + fmt(x);
            }
        }
        add("poly-growth", pass, wit, slope);
    }

    // Osgood divergence via coordinate-ladder classifier; the H table is
    // optional (1/h underflows for the deepest nested-log members)
    TransformConfig tc;
    tc.x_max = cfg.x_max;
    std::unique_ptr<OsgoodTransform> T;
    try {
        T = std::make_unique<OsgoodTransform>(d, tc);
    } catch (const std::exception&) {
        T.reset();
    }
    rep.osgood = classify_osgood(d, T.get(), cfg.x_max);
    {
        std::ostringstream w;
        if (!rep.osgood.conclusive) {
            w << "inconclusive at ladder level " << rep.osgood.level;
        } else if (!rep.osgood.divergent) {
            w << "H(x_max)=" << rep.osgood.H_xmax;
            if (rep.osgood.H_total_est > 0.0)
                w << " bounded, H_inf~" << rep.osgood.H_total_est;
        }
        add("osgood", rep.osgood.conclusive && rep.osgood.divergent, w.str(),
            rep.osgood.H_xmax);
    }

    // growth restriction: fit nu_t from log log theta(t, x)
    {
        std::vector<double> ts = {1.0, 2.0};
        if (std::abs(2.0 * cfg.horizon - 1.0) > 1e-12 &&
            std::abs(2.0 * cfg.horizon - 2.0) > 1e-12)
            ts.push_back(2.0 * cfg.horizon);
        const std::vector<double> xs = {8.0, 12.0, 18.0, 27.0, 40.0, 50.0};
        bool pass = true;
        std::string wit;
        for (double t : ts) {
            NuFit fit;
            fit.t = t;
            std::vector<double> lx, lll;
            for (double x : xs) {
                double loglog_theta;
                if (d.family() == DriftFamily::IteratedLog) {
                    FamilyValue th = iterated_family(d.ilog_n(), FamilyFn::ThetaN, t, x);
                    TowerReal ll = th.tower.log_().log_();
                    if (ll.depth != 0) {
                        fit.blew_up = false; // gigantic but lawful; clamp for the fit
                        loglog_theta = 700.0;
                    } else {
                        loglog_theta = ll.top;
                    }
                } else {
                    if (!T) {
                        fit.blew_up = true;
                        break;
                    }
                    FlowValue fv = T->flow(t, x);
                    if (fv.saturated && !std::isfinite(fv.log_value.log_value)) {
                        fit.blew_up = true;
                        break;
                    }
                    loglog_theta = std::log(fv.log_value.log_value);
                }
                lx.push_back(std::log(x));
                lll.push_back(std::log(std::max(loglog_theta, 1e-9)));
            }
            if (fit.blew_up) {
                pass = false;
                wit = "flow not finite at t=" + fmt(t);
                rep.nu_fits.push_back(fit);
                continue;
            }
            // least-squares slope
            double mx = 0, my = 0;
            for (size_t i = 0; i < lx.size(); ++i) {
                mx += lx[i];
                my += lll[i];
            }
            mx /= lx.size();
            my /= lll.size();
            double num = 0, den = 0;
            for (size_t i = 0; i < lx.size(); ++i) {
                num += (lx[i] - mx) * (lll[i] - my);
                den += (lx[i] - mx) * (lx[i] - mx);
            }
            fit.nu = std::max(num / den, 0.0);
            // prefactor from the worst grid point: log C = max(log theta - exp(x^nu))
            double lc = -1e300;
            for (size_t i = 0; i < lx.size(); ++i) {
                const double x = std::exp(lx[i]);
                const double loglog_theta = std::exp(lll[i]);
                if (loglog_theta > 690.0) continue; // beyond double; C dominated elsewhere
                const double log_theta = std::exp(loglog_theta);
                const double xe = std::pow(x, fit.nu);
                const double penalty = xe > 690.0 ? std::numeric_limits<double>::infinity()
                                                  : std::exp(xe);
                if (std::isfinite(log_theta) && std::isfinite(penalty))
                    lc = std::max(lc, log_theta - penalty);
            }
            fit.log_C = lc;
            rep.nu_fits.push_back(fit);
            if (!(fit.nu < 2.0)) {
                pass = false;
                wit = "nu_t=" + fmt(fit.nu) + " at t=" + fmt(t);
            }
        }
        double worst_nu = 0.0;
        for (const auto& f : rep.nu_fits) worst_nu = std::max(worst_nu, f.nu);
        add("growth-restriction", pass, wit, worst_nu);
    }

    // h_alpha convex for x >= 1
    {
        bool pass = true;
        std::string wit;
        double worst = 0.0;
        const double top = std::pow(cfg.x_max, 1.0 / cfg.alpha) / 2.0;
        for (int i = 0; i <= cfg.grid_points; ++i) {
            const double x =
                std::exp(std::log(1.0) + i * (std::log(top) - 0.0) / cfg.grid_points);
            const auto c = log_convexity_proxy(
                [&](double y) {
                    return d.log_h(std::pow(y, cfg.alpha)) -
                           (cfg.alpha - 1.0) * std::log(y);
                },
                std::max(x, 1.0 + 2e-3));
            if (c.proxy < -c.tol) {
                pass = false;
                wit = "h_alpha concave at x=" + fmt(x);
                worst = x;
                break;
            }
        }
        add("h-alpha-convex", pass, wit, worst);
    }

    // L(R) / (log R)^{1+eps} trend
    {
        std::vector<double> radii;
        for (double R = 10.0; R <= 1e8 * 1.0001; R *= 10.0) radii.push_back(R);
        rep.lip_trend = lip_over_log_trend(d, cfg.eps, radii);
        add("lip-over-log", rep.lip_trend.pass,
            rep.lip_trend.pass ? "" : "ratio not decreasing over last decade",
            rep.lip_trend.ratios.back());
    }

    rep.all_pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                               [](const CheckResult& c) { return c.pass; });
    return rep;
}

std::string AuditReport::to_json() const {
    nlohmann::ordered_json j;
    j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks)
        j["checks"].push_back({{"check", c.check},
                               {"pass", c.pass},
                               {"witness", c.witness},
                               {"value", c.value}});
    j["nu_fits"] = nlohmann::ordered_json::array();
    for (const auto& f : nu_fits)
        j["nu_fits"].push_back(
            {{"t", f.t}, {"nu", f.nu}, {"log_C", f.log_C}, {"blew_up", f.blew_up}});
    j["lip_trend"] = {{"radii", lip_trend.radii},
                      {"ratios", lip_trend.ratios},
                      {"pass", lip_trend.pass}};
    j["osgood"] = {{"divergent", osgood.divergent},
                   {"conclusive", osgood.conclusive},
                   {"level", osgood.level},
                   {"H_xmax", osgood.H_xmax},
                   {"H_total_est", osgood.H_total_est}};
    j["all_pass"] = all_pass;
    return j.dump(2);
}

} // namespace spde::osgood
