#include "spde/uniqueness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spde::uniq {

UniquenessParams::UniquenessParams(double eps_, double nu_, double nu2_, double K_,
                                   double T_)
    : eps(eps_), nu(nu_), nu1(nu_ * (1.0 + eps_)), nu2(nu2_), K(K_), T(T_) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("UniquenessParams: eps in (0,1)");
    if (!(nu > 0.0 && nu < 2.0 / (1.0 + eps)))
        throw std::invalid_argument("UniquenessParams: nu in (0, 2/(1+eps))");
    if (!(nu < nu1 && nu1 < nu2 && nu2 < 2.0))
        throw std::invalid_argument("UniquenessParams: need nu < nu1 < nu2 < 2");
    if (K <= 0.0) throw std::invalid_argument("UniquenessParams: K > 0");
    if (T <= 0.0) throw std::invalid_argument("UniquenessParams: T > 0");
}

UniquenessParams UniquenessParams::defaults(double eps, double T) {
    const double nu = 0.9 * 2.0 / (1.0 + eps);
    const double nu1 = nu * (1.0 + eps);
    const double nu2 = 0.5 * (nu1 + 2.0);
    return UniquenessParams(eps, nu, nu2, 1.0, T);
}

namespace {
double radius2(const GridSpec& g, int idx) {
    if (g.dim == 1) {
        const double x = g.coord(idx);
        return x * x;
    }
    const double x = g.coord(idx % g.n), y = g.coord(idx / g.n);
    return x * x + y * y;
}
} // namespace

double weighted_diff_norm(const Field& u1, const Field& u2, const GridSpec& g,
                          const UniquenessParams& p) {
    if (u1.size() != u2.size() || static_cast<int>(u1.size()) != g.total())
        throw std::invalid_argument("weighted_diff_norm: grid mismatch");
    double acc = 0.0;
    for (int i = 0; i < g.total(); ++i) {
        const double d = u1[i] - u2[i];
        const double w = std::exp(-std::pow(p.K + radius2(g, i), 0.5 * p.nu2));
        acc += d * d * w * w;
    }
    return std::sqrt(acc * std::pow(g.spacing(), g.dim));
}

namespace {
double bracket_value(const UniquenessParams& p, double C, int dim, double K,
                     double r2) {
    const double A = K + r2;
    return C * (1.0 + std::pow(std::sqrt(r2), p.nu1)) +
           p.nu2 * p.nu2 * (1.0 + p.T + 0.5 * p.T * p.T) * std::pow(A, p.nu2 - 1.0) +
           p.T * p.nu * (p.nu + dim - 2.0) * std::pow(A, 0.5 * p.nu2 - 1.0) -
           0.5 * std::pow(A, 0.5 * p.nu2);
}
} // namespace

SelectKResult select_K(const UniquenessParams& p, double /*M_realized*/,
                       double C_lip, const GridSpec& g) {
    SelectKResult res;
    for (double K = 1.0; K <= std::pow(2.0, 64); K *= 2.0) {
        double worst = -std::numeric_limits<double>::infinity();
        double worst_x = 0.0;
        for (int i = 0; i < g.total(); ++i) {
            const double r2 = radius2(g, i);
            const double b = bracket_value(p, C_lip, g.dim, K, r2);
            if (b > worst) {
                worst = b;
                worst_x = std::sqrt(r2);
            }
        }
        if (worst <= 0.0) {
            res.K = K;
            res.found = true;
            return res;
        }
        res.worst_x = worst_x;
        res.worst_value = worst;
    }
    res.found = false;
    return res;
}

double measure_C_lip(const osgood::DriftSpec& d, double M,
                     const UniquenessParams& p, const GridSpec& g) {
    double C = 0.0;
    for (int i = 0; i < g.total(); ++i) {
        const double r = std::sqrt(radius2(g, i));
        const double arg = M * std::exp(std::pow(r, p.nu));
        if (!std::isfinite(arg)) continue;
        C = std::max(C, d.lipschitz(arg) / (1.0 + std::pow(r, p.nu1)));
    }
    return C;
}

osgood::LipTrend lip_growth_check(const osgood::DriftSpec& d, double eps,
                                  const std::vector<double>& radii) {
    return osgood::lip_over_log_trend(d, eps, radii);
}

double weak_residual(const solver::SolutionTrace& trace, size_t phi_index,
                     double t) {
    if (phi_index >= trace.weak.size())
        throw std::out_of_range("weak_residual: no such test function");
    const auto& w = trace.weak[phi_index];
    // locate the step with this time stamp
    size_t j = trace.times.size();
    for (size_t k = 0; k < trace.times.size(); ++k)
        if (std::abs(trace.times[k] - t) <= 1e-12 * (1.0 + std::abs(t))) {
            j = k;
            break;
        }
    if (j == trace.times.size())
        throw std::invalid_argument("weak_residual: t is not a recorded step");
    return w.u_phi[j] - w.u_phi[0] - w.int_lap[j] - w.int_drift[j] - w.pairing[j];
}

DecayTable uniqueness_experiment(const solver::SolverConfig& cfg,
                                 std::shared_ptr<const noise::NoiseStream> noise,
                                 const std::vector<double>& levels,
                                 const UniquenessParams& p) {
    DecayTable table;
    table.K = p.K;
    table.nu = p.nu;
    table.nu1 = p.nu1;
    table.nu2 = p.nu2;
    std::vector<solver::SolutionTrace> traces;
    for (double N : levels) {
        solver::SolverConfig c = cfg;
        c.cutoff_N = N;
        traces.push_back(solver::evolve(c, noise));
    }
    const double T = cfg.horizon;
    for (double t : {0.25 * T, 0.5 * T, T}) {
        // snap to the nearest stored step common to all traces
        size_t step = 0;
        double best = std::numeric_limits<double>::infinity();
        for (size_t s : traces[0].stored) {
            const double d = std::abs(traces[0].times[s] - t);
            if (d < best) {
                best = d;
                step = s;
            }
        }
        for (size_t l = 0; l + 1 < traces.size(); ++l) {
            DecayRow row;
            row.t = traces[0].times[step];
            row.level_pair = std::to_string(levels[l]) + "|" +
                             std::to_string(levels[l + 1]);
            row.norm = weighted_diff_norm(traces[l].u_at(step),
                                          traces[l + 1].u_at(step), cfg.grid, p);
            table.rows.push_back(row);
        }
    }
    return table;
}

std::vector<double> dt_refinement_norms(const solver::SolverConfig& cfg,
                                        std::shared_ptr<const noise::NoiseStream> noise,
                                        const UniquenessParams& p, int halvings,
                                        double t_eval) {
    std::vector<solver::SolutionTrace> traces;
    double dt = cfg.dt;
    for (int k = 0; k <= halvings; ++k) {
        solver::SolverConfig c = cfg;
        c.dt = dt;
        c.store_every = std::max(1, static_cast<int>(std::lround(t_eval / (4 * dt))));
        traces.push_back(solver::evolve(c, noise));
        dt *= 0.5;
    }
    auto field_at = [&](const solver::SolutionTrace& tr) -> const Field& {
        for (size_t s : tr.stored)
            if (std::abs(tr.times[s] - t_eval) <= 1e-9) return tr.u_at(s);
        throw std::runtime_error("dt_refinement_norms: t_eval not stored");
    };
    std::vector<double> norms;
    for (int k = 0; k + 1 <= halvings; ++k)
        norms.push_back(weighted_diff_norm(field_at(traces[k]), field_at(traces[k + 1]),
                                           cfg.grid, p));
    return norms;
}

} // namespace spde::uniq
