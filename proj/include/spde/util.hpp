#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace spde {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kE = 2.71828182845904523536;

/// A positive quantity carried by its natural logarithm, so values far beyond
/// the double range (towers of exponentials) stay representable.
struct LogScalar {
    double log_value = -std::numeric_limits<double>::infinity();

    static LogScalar from_value(double v) {
        if (v < 0.0) throw std::domain_error("LogScalar: negative value");
        return LogScalar{std::log(v)};
    }
    static LogScalar from_log(double lv) { return LogScalar{lv}; }

    /// True when exp(log_value) would overflow a double.
    bool saturated() const { return log_value > 709.0; }

    double value() const {
        return saturated() ? std::numeric_limits<double>::infinity()
                           : std::exp(log_value);
    }

    bool operator<(const LogScalar& o) const { return log_value < o.log_value; }
};

/// Value in [0, +inf] represented as E_depth(top) = exp applied `depth` times
/// to `top`. Canonical form keeps top in [0, ~700] when depth > 0 so that
/// arithmetic on towers of exponentials (iterated-log coordinates) never
/// overflows.
struct TowerReal {
    int depth = 0;
    double top = 0.0;

    static TowerReal from(double v) {
        TowerReal r{0, v};
        r.normalize();
        return r;
    }

    void normalize() {
        while (top > 700.0) {
            top = std::log(top);
            ++depth;
        }
        while (depth > 0 && top < 1.0) {
            top = std::exp(top);
            --depth;
        }
    }

    TowerReal exp_() const {
        TowerReal r{depth + 1, top};
        r.normalize();
        return r;
    }

    /// log of the value; requires value > 0 (depth > 0 or top > 0).
    TowerReal log_() const {
        if (depth == 0) {
            if (top <= 0.0) throw std::domain_error("TowerReal::log_ of non-positive");
            TowerReal r{0, std::log(top)};
            r.normalize();
            return r;
        }
        TowerReal r{depth - 1, top};
        r.normalize();
        return r;
    }

    /// x^p via exp(p log x).
    TowerReal pow_(double p) const {
        if (depth == 0) return from(std::pow(top, p));
        // log(x^p) = p * E_{depth-1}(top); scale in the representable layer.
        TowerReal lg = log_();
        if (lg.depth == 0) {
            lg.top *= p;
            lg.normalize();
        } else {
            // p * E_d(t) = E_d(t + fold of log p at the right layer); for the
            // magnitudes handled here log p is negligible below depth 1.
            TowerReal l2 = lg.log_();
            if (l2.depth == 0) l2.top += std::log(p);
            l2.normalize();
            lg = l2.exp_();
        }
        return lg.exp_();
    }

    double to_double() const {
        double v = top;
        for (int i = 0; i < depth; ++i) {
            if (v > 709.0) return std::numeric_limits<double>::infinity();
            v = std::exp(v);
        }
        return v;
    }

    bool representable() const { return std::isfinite(to_double()); }

    /// Total order: compare by normalized (depth, top). Adjacent depths are
    /// reconciled by lowering the shallower value when possible.
    friend bool operator<(const TowerReal& a, const TowerReal& b) {
        TowerReal x = a, y = b;
        x.normalize();
        y.normalize();
        while (x.depth < y.depth && x.top <= 700.0) {
            x.top = (x.top > 700.0) ? std::numeric_limits<double>::infinity()
                                    : std::exp(x.top);
            ++x.depth;
            if (!std::isfinite(x.top)) return true;
        }
        while (y.depth < x.depth && y.top <= 700.0) {
            y.top = std::exp(y.top);
            ++y.depth;
            if (!std::isfinite(y.top)) return false;
        }
        if (x.depth != y.depth) return x.depth < y.depth;
        return x.top < y.top;
    }

    std::string str() const {
        if (depth == 0) return std::to_string(top);
        return "E" + std::to_string(depth) + "(" + std::to_string(top) + ")";
    }
};

inline double sqr(double x) { return x * x; }

} // namespace spde
