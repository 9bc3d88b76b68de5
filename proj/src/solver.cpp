#include "spde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spde::solver {

namespace {

void index_to_xy(const GridSpec& g, int idx, double* x) {
    if (g.dim == 1) {
        x[0] = g.coord(idx);
        x[1] = 0.0;
    } else {
        x[0] = g.coord(idx % g.n);
        x[1] = g.coord(idx / g.n);
    }
}

double dot_grid(const GridSpec& g, const Field& a, const Field& b) {
    double s = 0.0;
    for (int i = 0; i < g.total(); ++i) s += a[i] * b[i];
    return s * std::pow(g.spacing(), g.dim);
}

} // namespace

Field InitialData::sample(const GridSpec& g) const {
    Field f(g.total(), 0.0);
    for (int i = 0; i < g.total(); ++i) {
        double x[2];
        index_to_xy(g, i, x);
        switch (kind) {
            case Kind::Zero: f[i] = 0.0; break;
            case Kind::Constant: f[i] = amplitude; break;
            case Kind::CosMode: {
                const double k = kPi * mode / g.half_length;
                f[i] = amplitude * std::cos(k * x[0]) *
                       (g.dim == 2 ? std::cos(k * x[1]) : 1.0);
                break;
            }
            case Kind::Rho0: {
                weight::StaticWeight w{g.dim};
                f[i] = amplitude * w.value(x);
                break;
            }
            case Kind::Sine: {
                const double k = kPi * mode / g.half_length;
                f[i] = amplitude * std::sin(k * x[0]);
                break;
            }
            case Kind::Spike:
                f[i] = 0.0;
                break;
            case Kind::Custom:
                f[i] = custom(x[0], x[1]);
                break;
        }
    }
    if (kind == Kind::Spike) {
        // unit mass concentrated on the center cell
        int j = g.dim == 1 ? g.n / 2 : (g.n / 2) * g.n + g.n / 2;
        f[j] = amplitude / std::pow(g.spacing(), g.dim);
    }
    return f;
}

double InitialData::audit_sup_ratio(const GridSpec& g) const {
    const Field f = sample(g);
    weight::StaticWeight w{g.dim};
    double best = 0.0;
    for (int i = 0; i < g.total(); ++i) {
        double x[2];
        index_to_xy(g, i, x);
        best = std::max(best, std::abs(f[i]) / w.value(x));
    }
    return best;
}

namespace {
double bump(double s) { return std::exp(-1.0 / (1.0 - s * s)); }
// b'' / b = w'' + w'^2 with w = -1/(1-s^2)
double bump_curv(double s) {
    const double q = 1.0 - s * s;
    const double w1 = -2.0 * s / (q * q);
    const double w2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
    return w2 + w1 * w1;
}
} // namespace

double TestFunction::value(const double* x) const {
    double v = amplitude;
    for (int k = 0; k < dim; ++k) {
        const double s = (x[k] - center[k]) / radius;
        if (std::abs(s) >= 1.0) return 0.0;
        v *= bump(s);
    }
    return v;
}

double TestFunction::laplacian(const double* x) const {
    double b[2] = {1.0, 1.0}, c[2] = {0.0, 0.0};
    for (int k = 0; k < dim; ++k) {
        const double s = (x[k] - center[k]) / radius;
        if (std::abs(s) >= 1.0) return 0.0;
        b[k] = bump(s);
        c[k] = bump_curv(s) * b[k];
    }
    if (dim == 1) return amplitude * c[0] / (radius * radius);
    return amplitude * (c[0] * b[1] + b[0] * c[1]) / (radius * radius);
}

bool TestFunction::supported_inside(const GridSpec& g) const {
    for (int k = 0; k < dim; ++k)
        if (std::abs(center[k]) + radius >= g.half_length - g.spacing())
            return false;
    return true;
}

int SolverConfig::steps() const {
    const int m = static_cast<int>(std::lround(horizon / dt));
    if (m < 1 || std::abs(m * dt - horizon) > 1e-9 * horizon)
        throw std::invalid_argument("SolverConfig: horizon must be a multiple of dt");
    return m;
}

double SolutionTrace::realized_M() const {
    double m = 0.0;
    for (double v : sup_z_ratio) m = std::max(m, v);
    return m;
}

bool SolutionTrace::has_field(size_t step) const {
    return std::find(stored.begin(), stored.end(), step) != stored.end();
}

size_t SolutionTrace::stored_slot(size_t step) const {
    const auto it = std::find(stored.begin(), stored.end(), step);
    if (it == stored.end())
        throw std::out_of_range("SolutionTrace: no field stored at step " +
                                std::to_string(step));
    return static_cast<size_t>(it - stored.begin());
}

const Field& SolutionTrace::u_at(size_t step) const { return u_fields[stored_slot(step)]; }
const Field& SolutionTrace::z_at(size_t step) const { return z_fields[stored_slot(step)]; }

Field apply_heat_semigroup(const Field& f, const GridSpec& g, double t) {
    if (t < 0.0) throw std::domain_error("apply_heat_semigroup: t >= 0 required");
    if (t == 0.0) return f;
    Fft fft(g);
    CVec modes;
    fft.field_to_modes(f, modes);
    for (int i = 0; i < g.total(); ++i)
        modes[i] *= std::exp(-0.5 * g.freq_sq(i) * t);
    Field out;
    fft.modes_to_field(modes, out);
    return out;
}

InitialCheck initial_convolve_and_check(const InitialData& u0, const GridSpec& g,
                                        double t) {
    InitialCheck chk;
    chk.C = u0.audit_sup_ratio(g);
    chk.U0 = apply_heat_semigroup(u0.sample(g), g, t);
    chk.jensen_pass = true;
    for (int i = 0; i < g.total(); ++i) {
        double x[2];
        index_to_xy(g, i, x);
        const double r2 = x[0] * x[0] + x[1] * x[1];
        const double bound = chk.C * std::sqrt(std::log(kE + r2 + t));
        const double ratio = bound > 0.0 ? chk.U0[i] / bound : 0.0;
        chk.worst_ratio = std::max(chk.worst_ratio, ratio);
    }
    chk.jensen_pass = chk.worst_ratio <= 1.0 + 1e-9;
    return chk;
}

double cutoff_value(double z, double N) { return std::clamp(z, -N, N); }

Field cutoff_field(const Field& f, double N) {
    Field out(f.size());
    for (size_t i = 0; i < f.size(); ++i) out[i] = cutoff_value(f[i], N);
    return out;
}

double cutoff_drift(const osgood::DriftSpec& d, double N, double u) {
    return d.f(cutoff_value(u, N));
}

namespace {

struct ReactionStep {
    double value = 0.0;
    bool crossed = false;
    double crossing_time = 0.0;
};

// pointwise adaptive RK45 (Cash-Karp) for du/dt = f_N(u) over [0, dt] with
// threshold-crossing detection
ReactionStep integrate_reaction(const osgood::DriftSpec& d, double N, double u0,
                                double dt, double threshold) {
    ReactionStep out;
    auto rhs = [&](double u) { return cutoff_drift(d, N, u); };
    double u = u0, s = 0.0;
    double h = dt;
    for (long guard = 0; guard < 200000; ++guard) {
        if (s >= dt) break;
        h = std::min(h, dt - s);
        const double k1 = rhs(u);
        const double k2 = rhs(u + h * 0.2 * k1);
        const double k3 = rhs(u + h * (3.0 / 40 * k1 + 9.0 / 40 * k2));
        const double k4 = rhs(u + h * (0.3 * k1 - 0.9 * k2 + 1.2 * k3));
        const double k5 =
            rhs(u + h * (-11.0 / 54 * k1 + 2.5 * k2 - 70.0 / 27 * k3 + 35.0 / 27 * k4));
        const double k6 = rhs(u + h * (1631.0 / 55296 * k1 + 175.0 / 512 * k2 +
                                       575.0 / 13824 * k3 + 44275.0 / 110592 * k4 +
                                       253.0 / 4096 * k5));
        const double u5 = u + h * (37.0 / 378 * k1 + 250.0 / 621 * k3 +
                                   125.0 / 594 * k4 + 512.0 / 1771 * k6);
        const double u4 = u + h * (2825.0 / 27648 * k1 + 18575.0 / 48384 * k3 +
                                   13525.0 / 55296 * k4 + 277.0 / 14336 * k5 +
                                   0.25 * k6);
        const double err = std::abs(u5 - u4);
        const double tol = 1e-10 * (1.0 + std::abs(u)) + 1e-12;
        if (!std::isfinite(u5) || std::abs(u5) > threshold) {
            // locate the crossing by bisection on the step size
            double lo = 0.0, hi = h;
            for (int b = 0; b < 60; ++b) {
                const double mid = 0.5 * (lo + hi);
                const double k1m = rhs(u);
                double um = u + mid * k1m; // Euler probe inside a short window
                // refine with one RK4 stage for accuracy
                const double k2m = rhs(u + 0.5 * mid * k1m);
                const double k3m = rhs(u + 0.5 * mid * k2m);
                const double k4m = rhs(u + mid * k3m);
                um = u + mid / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m);
                if (std::isfinite(um) && std::abs(um) <= threshold)
                    lo = mid;
                else
                    hi = mid;
            }
            out.crossed = true;
            out.crossing_time = s + hi;
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
        if (err <= tol) {
            u = u5;
            s += h;
        }
        const double grow = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
        h *= std::clamp(grow, 0.2, 5.0);
        if (h < 1e-18) break;
    }
    out.value = u;
    return out;
}

} // namespace

SolutionTrace evolve(const SolverConfig& cfg,
                     std::shared_ptr<const noise::NoiseStream> noise,
                     const std::vector<TestFunction>& phis) {
    const GridSpec& g = cfg.grid;
    const int steps = cfg.steps();
    const int N = g.total();
    const bool stochastic = cfg.sigma != 0.0;
    if (stochastic && !noise)
        throw std::invalid_argument("evolve: sigma != 0 requires a noise stream");
    if (noise && !noise->grid().same_as(g))
        throw std::invalid_argument("evolve: noise grid mismatch");
    if (noise && std::abs(noise->sigma() - cfg.sigma) > 1e-14)
        throw std::invalid_argument("evolve: noise sigma mismatch");
    int substeps = 1;
    if (noise) {
        const double m = cfg.dt / noise->dt_fine();
        substeps = static_cast<int>(std::lround(m));
        if (substeps < 1 || std::abs(m - substeps) > 1e-9)
            throw std::invalid_argument("evolve: dt must be a multiple of dt_fine");
    }
    for (const auto& phi : phis)
        if (!phi.supported_inside(g))
            throw std::invalid_argument("evolve: test function support touches boundary");

    SolutionTrace tr;
    tr.grid = g;
    tr.dt = cfg.dt;
    tr.cutoff_N = cfg.cutoff_N;
    const int cadence = cfg.store_every > 0 ? cfg.store_every
                                            : std::max(1, steps / 64);

    Fft fft(g);
    std::vector<double> decay(N);
    for (int i = 0; i < N; ++i) decay[i] = std::exp(-0.5 * g.freq_sq(i) * cfg.dt);

    weight::StaticWeight rho0{g.dim};
    std::vector<double> rho0_grid(N);
    for (int i = 0; i < N; ++i) {
        double x[2];
        index_to_xy(g, i, x);
        rho0_grid[i] = rho0.value(x);
    }

    // phi tables
    std::vector<Field> phi_vals(phis.size()), phi_lap(phis.size());
    tr.weak.resize(phis.size());
    for (size_t p = 0; p < phis.size(); ++p) {
        phi_vals[p].resize(N);
        phi_lap[p].resize(N);
        for (int i = 0; i < N; ++i) {
            double x[2];
            index_to_xy(g, i, x);
            phi_vals[p][i] = phis[p].value(x);
            phi_lap[p][i] = phis[p].laplacian(x);
        }
    }

    Field u = cfg.u0.sample(g);
    CVec z_modes;
    fft.field_to_modes(u, z_modes); // z = U0 + Z starts at u0
    Field z = u;

    const bool has_drift = cfg.drift.has_value();
    CVec work(N), inc, inc_plain;
    Field fN(N, 0.0), pair_field;

    auto record_monitors = [&](size_t, double t) {
        tr.times.push_back(t);
        tr.sup_u.push_back(sup_abs(u));
        tr.sup_z.push_back(sup_abs(z));
        double zr = 0.0;
        for (int i = 0; i < N; ++i) zr = std::max(zr, std::abs(z[i]) / rho0_grid[i]);
        tr.sup_z_ratio.push_back(zr);
    };
    auto record_fields = [&](size_t j) {
        tr.stored.push_back(j);
        tr.u_fields.push_back(u);
        tr.z_fields.push_back(z);
    };
    auto record_weak = [&](bool first) {
        for (size_t p = 0; p < phis.size(); ++p) {
            WeakAccum& w = tr.weak[p];
            w.u_phi.push_back(dot_grid(g, u, phi_vals[p]));
            if (first) {
                w.int_lap.push_back(0.0);
                w.int_drift.push_back(0.0);
                w.pairing.push_back(0.0);
            }
        }
    };

    record_monitors(0, 0.0);
    record_fields(0);
    record_weak(true);

    for (int j = 0; j < steps; ++j) {
        const double t_next = (j + 1) * cfg.dt;

        // weak-form time integrals, left rule, before the state advances
        for (size_t p = 0; p < phis.size(); ++p) {
            WeakAccum& w = tr.weak[p];
            double lap_term = 0.0, drift_term = 0.0;
            for (int i = 0; i < N; ++i) {
                lap_term += u[i] * 0.5 * phi_lap[p][i];
                if (has_drift)
                    drift_term += cutoff_drift(*cfg.drift, cfg.cutoff_N, u[i]) *
                                  phi_vals[p][i];
            }
            const double cell = std::pow(g.spacing(), g.dim);
            w.int_lap.push_back(w.int_lap.back() + cfg.dt * lap_term * cell);
            w.int_drift.push_back(w.int_drift.back() + cfg.dt * drift_term * cell);
        }

        // reaction stage
        bool flagged = false;
        double flag_time = t_next;
        if (has_drift) {
            if (cfg.reaction == ReactionMode::Euler) {
                for (int i = 0; i < N; ++i)
                    fN[i] = cutoff_drift(*cfg.drift, cfg.cutoff_N, u[i]);
                for (int i = 0; i < N; ++i) work[i] = u[i] + cfg.dt * fN[i];
            } else {
                double earliest = std::numeric_limits<double>::infinity();
                for (int i = 0; i < N; ++i) {
                    ReactionStep rs = integrate_reaction(
                        *cfg.drift, cfg.cutoff_N, u[i], cfg.dt, cfg.blowup_threshold);
                    work[i] = rs.value;
                    if (rs.crossed) {
                        flagged = true;
                        earliest = std::min(earliest, rs.crossing_time);
                    }
                }
                if (flagged) flag_time = j * cfg.dt + earliest;
            }
        } else {
            for (int i = 0; i < N; ++i) work[i] = u[i];
        }

        if (flagged) {
            tr.blowup = true;
            tr.blowup_time = flag_time;
            break;
        }

        // spectral stage: semigroup on (u + dt f) and noise increment
        fft.forward(work.data());
        const double invN = 1.0 / N;
        for (int i = 0; i < N; ++i) work[i] *= decay[i] * invN;
        if (stochastic) {
            noise->coarse_increment(static_cast<uint64_t>(j) * substeps, substeps,
                                    inc, phis.empty() ? nullptr : &inc_plain);
            for (int i = 0; i < N; ++i) {
                work[i] += inc[i];
                z_modes[i] = z_modes[i] * decay[i] + inc[i];
            }
        } else {
            for (int i = 0; i < N; ++i) z_modes[i] *= decay[i];
        }
        fft.modes_to_field(work, u);
        fft.modes_to_field(z_modes, z);

        // noise pairing from the identical Gaussian increments
        if (stochastic && !phis.empty()) {
            fft.modes_to_field(inc_plain, pair_field);
            for (size_t p = 0; p < phis.size(); ++p)
                tr.weak[p].pairing.push_back(tr.weak[p].pairing.back() +
                                             dot_grid(g, pair_field, phi_vals[p]));
        } else {
            for (size_t p = 0; p < phis.size(); ++p)
                tr.weak[p].pairing.push_back(tr.weak[p].pairing.back());
        }

        record_monitors(j + 1, t_next);
        record_weak(false);

        // blow-up check (Euler path / post-noise state)
        double s = 0.0;
        bool finite = true;
        for (int i = 0; i < N; ++i) {
            if (!std::isfinite(u[i])) {
                finite = false;
                break;
            }
            s = std::max(s, std::abs(u[i]));
        }
        if (!finite || s > cfg.blowup_threshold) {
            tr.blowup = true;
            tr.blowup_time = t_next;
            record_fields(j + 1);
            break;
        }

        if ((j + 1) % cadence == 0 || j + 1 == steps) record_fields(j + 1);
    }
    return tr;
}

SolutionTrace picard_solve(const SolverConfig& cfg,
                           std::shared_ptr<const noise::NoiseStream> noise) {
    const GridSpec& g = cfg.grid;
    const int steps = cfg.steps();
    const int N = g.total();
    const bool stochastic = cfg.sigma != 0.0;
    if (stochastic && !noise)
        throw std::invalid_argument("picard_solve: sigma != 0 requires noise");
    int substeps = 1;
    if (noise) {
        const double m = cfg.dt / noise->dt_fine();
        substeps = static_cast<int>(std::lround(m));
        if (substeps < 1 || std::abs(m - substeps) > 1e-9)
            throw std::invalid_argument("picard_solve: dt must be a multiple of dt_fine");
    }

    Fft fft(g);
    std::vector<double> decay(N);
    for (int i = 0; i < N; ++i) decay[i] = std::exp(-0.5 * g.freq_sq(i) * cfg.dt);

    // precompute z trajectory (Fourier) and its cutoff in x-space
    std::vector<Field> zN(steps + 1);
    std::vector<Field> z_raw(steps + 1);
    {
        CVec zm;
        fft.field_to_modes(cfg.u0.sample(g), zm);
        Field zx;
        fft.modes_to_field(zm, zx);
        z_raw[0] = zx;
        zN[0] = cutoff_field(zx, cfg.cutoff_N);
        CVec inc;
        for (int j = 0; j < steps; ++j) {
            if (stochastic) {
                noise->coarse_increment(static_cast<uint64_t>(j) * substeps, substeps,
                                        inc);
                for (int i = 0; i < N; ++i) zm[i] = zm[i] * decay[i] + inc[i];
            } else {
                for (int i = 0; i < N; ++i) zm[i] *= decay[i];
            }
            fft.modes_to_field(zm, zx);
            z_raw[j + 1] = zx;
            zN[j + 1] = cutoff_field(zx, cfg.cutoff_N);
        }
    }

    const bool has_drift = cfg.drift.has_value();
    const double LN = has_drift ? cfg.drift->lipschitz(cfg.cutoff_N) : 0.0;
    const int window =
        LN > 0.0 ? std::max(1, static_cast<int>(0.5 / (LN * cfg.dt))) : steps;

    std::vector<Field> u(steps + 1);
    u[0] = zN[0];
    CVec v_start(N, {0.0, 0.0}); // Fourier of v at the window start

    int w0 = 0;
    while (w0 < steps) {
        const int w1 = std::min(w0 + window, steps);
        const int W = w1 - w0;
        // initial guess: homogeneous propagation of v(t0), no within-window drift
        std::vector<CVec> Sv(W + 1, v_start);
        for (int j = 1; j <= W; ++j) {
            Sv[j] = Sv[j - 1];
            for (int i = 0; i < N; ++i) Sv[j][i] *= decay[i];
        }
        Field tmp;
        for (int j = 0; j <= W; ++j) {
            fft.modes_to_field(Sv[j], tmp);
            u[w0 + j] = zN[w0 + j];
            for (int i = 0; i < N; ++i) u[w0 + j][i] += tmp[i];
        }

        double prev_delta = std::numeric_limits<double>::infinity();
        CVec P(N), fhat(N);
        std::vector<CVec> Pj(W + 1);
        for (int sweep = 0; sweep < 80; ++sweep) {
            // P_{j+1} = S(dt) (P_j + dt fft(f_N(u_j)))
            Pj[0].assign(N, {0.0, 0.0});
            Field fj(N);
            for (int j = 0; j < W; ++j) {
                for (int i = 0; i < N; ++i)
                    fj[i] = has_drift
                                ? cutoff_drift(*cfg.drift, cfg.cutoff_N, u[w0 + j][i])
                                : 0.0;
                fft.field_to_modes(fj, fhat);
                Pj[j + 1].resize(N);
                for (int i = 0; i < N; ++i)
                    Pj[j + 1][i] = decay[i] * (Pj[j][i] + cfg.dt * fhat[i]);
            }
            double delta = 0.0;
            for (int j = 1; j <= W; ++j) {
                CVec m = Sv[j];
                for (int i = 0; i < N; ++i) m[i] += Pj[j][i];
                fft.modes_to_field(m, tmp);
                for (int i = 0; i < N; ++i) {
                    const double nu = zN[w0 + j][i] + tmp[i];
                    delta = std::max(delta, std::abs(nu - u[w0 + j][i]));
                    u[w0 + j][i] = nu;
                }
            }
            if (sweep >= 1 && delta > 0.55 * prev_delta + cfg.picard_tol)
                throw std::runtime_error(
                    "picard_solve: contraction factor above 1/2; window misconfigured");
            prev_delta = delta;
            if (delta < cfg.picard_tol) break;
        }
        // v at the window end becomes the next start
        CVec vend = Sv[W];
        for (int i = 0; i < N; ++i) vend[i] += Pj[W][i];
        v_start = vend;
        w0 = w1;
    }

    // assemble the trace
    SolutionTrace tr;
    tr.grid = g;
    tr.dt = cfg.dt;
    tr.cutoff_N = cfg.cutoff_N;
    const int cadence = cfg.store_every > 0 ? cfg.store_every
                                            : std::max(1, steps / 64);
    weight::StaticWeight rho0{g.dim};
    std::vector<double> rho0_grid(N);
    for (int i = 0; i < N; ++i) {
        double x[2];
        index_to_xy(g, i, x);
        rho0_grid[i] = rho0.value(x);
    }
    for (int j = 0; j <= steps; ++j) {
        tr.times.push_back(j * cfg.dt);
        tr.sup_u.push_back(sup_abs(u[j]));
        tr.sup_z.push_back(sup_abs(z_raw[j]));
        double zr = 0.0;
        for (int i = 0; i < N; ++i)
            zr = std::max(zr, std::abs(z_raw[j][i]) / rho0_grid[i]);
        tr.sup_z_ratio.push_back(zr);
        if (j % cadence == 0 || j == steps) {
            tr.stored.push_back(j);
            tr.u_fields.push_back(u[j]);
            tr.z_fields.push_back(z_raw[j]);
        }
    }
    return tr;
}

RhoGridTable::RhoGridTable(const weight::DynamicWeight& w, const GridSpec& g,
                           const std::vector<double>& times)
    : grid_(g), times_(times) {
    const int N = g.total();
    values_.resize(times_.size());
    for (size_t s = 0; s < times_.size(); ++s) {
        values_[s].resize(N);
        // radial symmetry: memoize on |x|^2
        std::vector<std::pair<double, double>> memo;
        for (int i = 0; i < N; ++i) {
            double x[2];
            index_to_xy(g, i, x);
            const double r2 = x[0] * x[0] + x[1] * x[1];
            double found = -1.0;
            for (const auto& [key, val] : memo)
                if (std::abs(key - r2) <= 1e-12 * (1.0 + r2)) {
                    found = val;
                    break;
                }
            if (found < 0.0) {
                double xr[2] = {std::sqrt(r2), 0.0};
                found = w.rho(times_[s], xr);
                memo.emplace_back(r2, found);
            }
            values_[s][i] = found;
        }
    }
}

bool RhoGridTable::matches(const GridSpec& g, const std::vector<double>& times) const {
    if (!grid_.same_as(g) || times.size() != times_.size()) return false;
    for (size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - times_[i]) > 1e-12) return false;
    return true;
}

MonitorReport monitor_weighted(const SolutionTrace& trace,
                               const weight::DynamicWeight& w,
                               const RhoGridTable* table) {
    MonitorReport rep;
    const GridSpec& g = trace.grid;
    const int N = g.total();
    rep.M = trace.realized_M();
    rep.C_lap = w.static_weight().sup_abs_laplacian();

    // K(M,T) = max{2M, H_b^{-1}(H_b(2M) + (C M + 1) T)}, b = a/(a-1)
    const double T = trace.times.back();
    const double alpha = w.alpha();
    const double beta = alpha / (alpha - 1.0);
    const auto& base = w.scaled().base();
    const double M2 = std::max(2.0 * rep.M, 1e-12);
    const double Hb_2M = base.eval(std::pow(M2, beta)) / beta;
    const double y = Hb_2M + (rep.C_lap * rep.M + 1.0) * T;
    osgood::FlowValue inv = base.inverse_extended(beta * y);
    const double logK_flow = inv.log_value.log_value / beta;
    const double logK = std::max(std::log(M2), logK_flow);
    rep.K = LogScalar::from_log(logK);
    rep.K_saturated = rep.K.saturated();

    std::vector<double> stored_times;
    for (size_t j : trace.stored) stored_times.push_back(trace.times[j]);
    std::optional<RhoGridTable> local;
    if (!table || !table->matches(g, stored_times)) {
        local.emplace(w, g, stored_times);
        table = &*local;
    }

    weight::StaticWeight rho0{g.dim};
    bool pass = true;
    for (size_t s = 0; s < trace.stored.size(); ++s) {
        const size_t j = trace.stored[s];
        const Field& uf = trace.u_fields[s];
        const Field& zf = trace.z_fields[s];
        double sup_q = -std::numeric_limits<double>::infinity();
        double arg = 0.0, sup_ur = 0.0;
        for (int i = 0; i < N; ++i) {
            double x[2];
            index_to_xy(g, i, x);
            const double rho = table->at(s, i);
            const double r0 = rho0.value(x);
            const double v = uf[i] - cutoff_value(zf[i], trace.cutoff_N);
            const double q = (v + rep.M * r0) / rho;
            if (q > sup_q) {
                sup_q = q;
                arg = x[0];
            }
            sup_ur = std::max(sup_ur, std::abs(uf[i]) / rho);
        }
        rep.steps.push_back(j);
        rep.sup_q.push_back(sup_q);
        rep.argmax_x.push_back(arg);
        rep.sup_u_over_rho.push_back(sup_ur);
        if (sup_ur > 0.0 && std::log(sup_ur) > logK + 1e-12) pass = false;
    }
    rep.bound_pass = pass;
    return rep;
}

std::vector<StabilizationRow> stabilization_check(
    const SolverConfig& cfg, std::shared_ptr<const noise::NoiseStream> noise,
    const std::vector<double>& levels) {
    std::vector<SolutionTrace> traces;
    for (double N : levels) {
        SolverConfig c = cfg;
        c.cutoff_N = N;
        traces.push_back(evolve(c, noise));
    }
    const GridSpec& g = cfg.grid;
    std::vector<StabilizationRow> rows;
    for (size_t l = 0; l + 1 < levels.size(); ++l) {
        StabilizationRow row;
        row.N = levels[l];
        const SolutionTrace& a = traces[l];
        const SolutionTrace& b = traces[l + 1];
        for (size_t s = 0; s < a.stored.size() && s < b.stored.size(); ++s) {
            const Field& ua = a.u_fields[s];
            const Field& ub = b.u_fields[s];
            const Field& za = a.z_fields[s];
            const Field& zb = b.z_fields[s];
            for (int i = 0; i < g.total(); ++i) {
                double x[2];
                index_to_xy(g, i, x);
                if (std::abs(x[0]) > 0.5 * g.half_length ||
                    (g.dim == 2 && std::abs(x[1]) > 0.5 * g.half_length))
                    continue; // central half-box only
                const double va = ua[i] - cutoff_value(za[i], levels[l]);
                const double vb = ub[i] - cutoff_value(zb[i], levels[l + 1]);
                row.d_sup = std::max(row.d_sup, std::abs(va - vb));
            }
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace spde::solver
