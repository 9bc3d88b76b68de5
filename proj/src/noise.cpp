#include "spde/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spde/quadrature.hpp"

namespace spde::noise {

SpectralMeasure SpectralMeasure::riesz(double beta, int d) {
    if (beta <= 0.0 || beta >= d)
        throw std::invalid_argument("riesz: beta in (0, d) required");
    return {MeasureKind::Riesz, beta, d};
}

SpectralMeasure SpectralMeasure::exp_decay(double a, int d) {
    if (a <= 0.0) throw std::invalid_argument("exp_decay: a > 0 required");
    return {MeasureKind::ExpDecay, a, d};
}

double SpectralMeasure::density(double r) const {
    switch (kind) {
        case MeasureKind::White: return 1.0;
        case MeasureKind::Riesz: return std::pow(r, param - dim);
        case MeasureKind::ExpDecay: return std::exp(-param * r);
    }
    throw std::logic_error("unknown measure kind");
}

double SpectralMeasure::grid_density(double r, double dxi) const {
    if (kind == MeasureKind::Riesz && r < 0.5 * dxi) {
        // cell average of the integrable singularity over |xi| < dxi/2
        const double half = 0.5 * dxi;
        if (dim == 1) // (1/dxi) * 2 int_0^half r^{beta-1} dr
            return 2.0 * std::pow(half, param) / (param * dxi);
        // (1/dxi^2) * 2 pi int_0^half r^{beta-2} r dr
        return 2.0 * kPi * std::pow(half, param) / (param * dxi * dxi);
    }
    return density(r);
}

double SpectralMeasure::tail_exponent() const {
    switch (kind) {
        case MeasureKind::White: return 0.0;
        case MeasureKind::Riesz: return param - dim;
        case MeasureKind::ExpDecay: return -std::numeric_limits<double>::infinity();
    }
    throw std::logic_error("unknown measure kind");
}

std::string SpectralMeasure::name() const {
    switch (kind) {
        case MeasureKind::White: return "white";
        case MeasureKind::Riesz: return "riesz(" + std::to_string(param) + ")";
        case MeasureKind::ExpDecay: return "exp-decay(" + std::to_string(param) + ")";
    }
    return "?";
}

DalangReport dalang_integral(const SpectralMeasure& mu, double eta) {
    if (eta <= 0.0 || eta >= 1.0)
        throw std::domain_error("dalang_integral: eta in (0,1) required");
    DalangReport rep;
    rep.eta = eta;
    const double cd = mu.dim == 1 ? 2.0 : 2.0 * kPi;
    const double p = 2.0 * (1.0 - eta);
    auto radial = [&](double r) {
        return cd * std::pow(r, mu.dim - 1) * mu.density(r) / (1.0 + std::pow(r, p));
    };
    rep.radial_exponent = (mu.dim - 1) + mu.tail_exponent() - p;
    if (rep.radial_exponent >= -1.0) {
        rep.finite = false;
        rep.note = "tail integrand ~ r^" + std::to_string(rep.radial_exponent) +
                   " diverges";
        return rep;
    }
    // head: analytic for the riesz singularity, quadrature otherwise
    double head = 0.0;
    double lo = 0.0;
    if (mu.kind == MeasureKind::Riesz) {
        const double eps = 1e-6;
        // int_0^eps c_d r^{d-1} r^{beta-d} dr, denominator ~ 1
        head = cd * std::pow(eps, mu.param) / mu.param;
        lo = eps;
    }
    const double R = 1e4;
    const double body = integrate_or_throw(radial, lo, R, 1e-12, 1e-10);
    double tail;
    if (mu.kind == MeasureKind::ExpDecay) {
        tail = integrate(radial, R, R + 200.0 / mu.param, 1e-14, 1e-12).value;
    } else {
        const double s = rep.radial_exponent;
        tail = cd * std::pow(R, s + 1.0) / (-(s + 1.0));
    }
    rep.value = head + body + tail;
    rep.finite = true;
    return rep;
}

NoiseStream::NoiseStream(GridSpec grid, SpectralMeasure mu, double sigma,
                         uint64_t seed, uint64_t path, double dt_fine)
    : grid_(grid), mu_(mu), sigma_(sigma), seed_(seed), path_(path),
      dt_fine_(dt_fine), rng_(mix_seed(seed, path)) {
    if (mu_.dim != grid_.dim)
        throw std::invalid_argument("NoiseStream: measure/grid dimension mismatch");
    if (dt_fine_ <= 0.0) throw std::invalid_argument("NoiseStream: dt_fine > 0");
    const int N = grid_.total();
    lambda_.resize(N);
    vcoef_.resize(N);
    owner_.resize(N);
    const double box_weight = std::pow(2.0 * grid_.half_length, -grid_.dim);
    const double dxi = kPi / grid_.half_length;
    for (int idx = 0; idx < N; ++idx) {
        const double k2 = grid_.freq_sq(idx);
        lambda_[idx] = 0.5 * k2;
        const double r = std::sqrt(k2);
        const double dens = mu_.grid_density(r, dxi);
        if (dens < 0.0)
            throw std::runtime_error("NoiseStream: negative spectral density");
        vcoef_[idx] = sigma_ * sigma_ * dens * box_weight;
        // mirror index (-k mod n per axis)
        const int n = grid_.n;
        if (grid_.dim == 1) {
            owner_[idx] = (n - idx) % n;
        } else {
            const int kx = idx % n, ky = idx / n;
            owner_[idx] = ((n - ky) % n) * n + (n - kx) % n;
        }
    }
}

double NoiseStream::mode_variance(int mode, double t) const {
    const double k2 = 2.0 * lambda_[mode];
    if (k2 == 0.0) return vcoef_[mode] * t;
    return vcoef_[mode] * (1.0 - std::exp(-k2 * t)) / k2;
}

void NoiseStream::fine_increment(uint64_t fine_index, CVec& out) const {
    const int N = grid_.total();
    out.assign(N, {0.0, 0.0});
    for (int idx = 0; idx < N; ++idx) {
        const int mirror = owner_[idx];
        if (mirror < idx) continue; // filled when its owner was visited
        const double v = step_variance(idx, dt_fine_);
        if (v == 0.0) continue;
        auto [g1, g2] = rng_.normal_pair(fine_index, static_cast<uint64_t>(idx));
        if (mirror == idx) {
            out[idx] = {g1 * std::sqrt(v), 0.0}; // self-conjugate: real
        } else {
            const double s = std::sqrt(0.5 * v);
            out[idx] = {g1 * s, g2 * s};
            out[mirror] = std::conj(out[idx]);
        }
    }
}

void NoiseStream::coarse_increment(uint64_t fine_start, int substeps,
                                   CVec& filtered, CVec* plain) const {
    const int N = grid_.total();
    filtered.assign(N, {0.0, 0.0});
    if (plain) plain->assign(N, {0.0, 0.0});
    CVec fine;
    for (int s = 0; s < substeps; ++s) {
        fine_increment(fine_start + s, fine);
        for (int idx = 0; idx < N; ++idx) {
            const double decay = std::exp(-lambda_[idx] * dt_fine_);
            // existing accumulation relaxes one more fine step, then add
            filtered[idx] = filtered[idx] * decay + fine[idx];
            if (plain) (*plain)[idx] += fine[idx];
        }
    }
}

StochConvState::StochConvState(std::shared_ptr<const NoiseStream> stream)
    : stream_(std::move(stream)) {
    modes_.assign(stream_->grid().total(), {0.0, 0.0});
}

void StochConvState::step(double dt) {
    if (dt <= 0.0) throw std::domain_error("StochConvState::step: dt > 0 required");
    const double df = stream_->dt_fine();
    const double m_real = dt / df;
    const int m = static_cast<int>(std::lround(m_real));
    if (m < 1 || std::abs(m_real - m) > 1e-9 * m)
        throw std::invalid_argument(
            "StochConvState::step: dt must be an integer multiple of dt_fine");
    CVec inc;
    stream_->coarse_increment(fine_cursor_, m, inc);
    const int N = stream_->grid().total();
    const double span = m * df; // bit-consistent across step partitions
    for (int idx = 0; idx < N; ++idx) {
        const double decay = std::exp(-stream_->lambda(idx) * span);
        modes_[idx] = modes_[idx] * decay + inc[idx];
    }
    fine_cursor_ += m;
    time_ += span;
}

Field StochConvState::field(const Fft& fft, double* imag_residue) const {
    Field out;
    fft.modes_to_field(modes_, out, imag_residue);
    return out;
}

std::vector<double> analytic_covariance(const NoiseStream& s, double t,
                                        const std::vector<int>& lags) {
    const GridSpec& g = s.grid();
    const int N = g.total();
    std::vector<double> out;
    for (int lag : lags) {
        const double r = lag * g.spacing();
        double acc = 0.0;
        for (int idx = 0; idx < N; ++idx) {
            // lag along the first axis
            const double xi = g.dim == 1 ? g.freq(idx) : g.freq(idx % g.n);
            acc += s.mode_variance(idx, t) * std::cos(xi * r);
        }
        out.push_back(acc);
    }
    return out;
}

CovarianceReport validate_covariance(const std::vector<Field>& samples,
                                     const NoiseStream& s, double t,
                                     const std::vector<int>& lags) {
    if (samples.size() < 1000)
        throw std::invalid_argument("validate_covariance: need >= 1000 samples");
    CovarianceReport rep;
    rep.lags = lags;
    rep.analytic = analytic_covariance(s, t, lags);
    const GridSpec& g = s.grid();
    const int N = g.total();
    const int n = g.n;
    const size_t P = samples.size();
    for (size_t li = 0; li < lags.size(); ++li) {
        const int lag = lags[li];
        double mean = 0.0, m2 = 0.0;
        for (const Field& f : samples) {
            double c = 0.0;
            for (int idx = 0; idx < N; ++idx) {
                int jdx;
                if (g.dim == 1) {
                    jdx = (idx + lag) % n;
                } else {
                    const int kx = idx % n, ky = idx / n;
                    jdx = ky * n + (kx + lag) % n;
                }
                c += f[idx] * f[jdx];
            }
            c /= N;
            mean += c;
            m2 += c * c;
        }
        mean /= P;
        const double var = std::max(0.0, m2 / P - mean * mean);
        const double se = std::sqrt(var / P) + 1e-300;
        rep.empirical.push_back(mean);
        rep.z_scores.push_back((mean - rep.analytic[li]) / se);
        rep.chi2 += sqr(rep.z_scores.back());
    }
    // chi-square 1% critical values for small dof
    static const double crit[] = {0.0, 6.635, 9.210, 11.345, 13.277, 15.086,
                                  16.812, 18.475, 20.090, 21.666, 23.209};
    const size_t dof = lags.size();
    rep.critical = dof < 11 ? crit[dof] : dof + 3.0 * std::sqrt(2.0 * dof);
    rep.pass = rep.chi2 <= rep.critical;
    return rep;
}

GrowthStat growth_stat(const std::shared_ptr<const NoiseStream>& stream,
                       double T, int steps) {
    StochConvState state(stream);
    const GridSpec& g = stream->grid();
    Fft fft(g);
    weight::StaticWeight rho0{g.dim};
    const double dt = T / steps;
    GrowthStat st;
    for (int k = 0; k < steps; ++k) {
        state.step(dt);
        Field z = state.field(fft);
        for (int idx = 0; idx < g.total(); ++idx) {
            double x[2] = {0.0, 0.0};
            if (g.dim == 1) {
                x[0] = g.coord(idx);
            } else {
                x[0] = g.coord(idx % g.n);
                x[1] = g.coord(idx / g.n);
            }
            const double w = rho0.value(x);
            st.sup_ratio = std::max(st.sup_ratio, std::abs(z[idx]) / w);
            st.sup_abs = std::max(st.sup_abs, std::abs(z[idx]));
        }
    }
    return st;
}

} // namespace spde::noise
