#pragma once

#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace spde {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;      // accumulated error estimate
    int evaluations = 0;
    bool converged = false;
    double worst_lo = 0.0;   // worst remaining subinterval when not converged
    double worst_hi = 0.0;
};

namespace detail {

// Gauss-Kronrod 7-15 pair on [-1,1] (QUADPACK dqk15 nodes/weights).
inline constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <typename F>
inline void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = kWgk[7] * fc;
    double resg = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double f1 = f(c - x);
        const double f2 = f(c + x);
        resk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    kronrod = resk * h;
    const double diff = std::abs(resk - resg) * h;
    // QUADPACK-style sharpened estimate
    err = diff;
    if (diff != 0.0) {
        const double scale = std::pow(200.0 * diff / (std::abs(kronrod) + 1e-300), 1.5);
        if (scale < 1.0) err = diff * scale;
    }
}

} // namespace detail

/// Adaptive Gauss-Kronrod integration: splits the worst panel until the
/// summed error estimate meets max(abs_tol, rel_tol * |I|).
template <typename F>
QuadResult integrate(const F& f, double a, double b, double abs_tol = 1e-12,
                     double rel_tol = 1e-12, int max_panels = 2000) {
    struct Panel {
        double a, b, value, error;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    QuadResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    std::priority_queue<Panel> heap;
    double v, e;
    detail::gk15(f, a, b, v, e);
    out.evaluations = 15;
    heap.push({a, b, v, e});
    double total = v, total_err = e;
    int panels = 1;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) &&
           panels < max_panels) {
        Panel p = heap.top();
        heap.pop();
        const double m = 0.5 * (p.a + p.b);
        double v1, e1, v2, e2;
        detail::gk15(f, p.a, m, v1, e1);
        detail::gk15(f, m, p.b, v2, e2);
        out.evaluations += 30;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push({p.a, m, v1, e1});
        heap.push({m, p.b, v2, e2});
        ++panels;
    }
    out.value = total;
    out.error = total_err;
    out.converged = total_err <= std::max(abs_tol, rel_tol * std::abs(total));
    if (!out.converged && !heap.empty()) {
        out.worst_lo = heap.top().a;
        out.worst_hi = heap.top().b;
    }
    return out;
}

/// Same, but throws when the tolerance cannot be met.
template <typename F>
double integrate_or_throw(const F& f, double a, double b, double abs_tol = 1e-12,
                          double rel_tol = 1e-12) {
    QuadResult r = integrate(f, a, b, abs_tol, rel_tol);
    if (!r.converged)
        throw std::runtime_error("quadrature did not converge on [" +
                                 std::to_string(r.worst_lo) + ", " +
                                 std::to_string(r.worst_hi) + "]");
    return r.value;
}

} // namespace spde
