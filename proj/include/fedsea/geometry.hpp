#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "fedsea/core.hpp"

namespace fedsea {

// Euclidean projection onto the centered ball; returns true when the point moved.
inline bool project_in_place(std::span<double> x, const Domain& domain) {
    if (!domain.bounded()) return false;
    const double n = vec::norm(x);
    if (n <= *domain.radius) return false;
    const double s = *domain.radius / n;
    for (double& v : x) v *= s;
    return true;
}

// Separable quadratic 0.5 * sum_i h_i (x_i - c_i)^2 + k. Every analytic expected loss in the
// library has this form with h fixed per experiment.
struct DiagQuadratic {
    Vector h;
    Vector center;
    double constant = 0.0;

    double value(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - center[i];
            s += h[i] * d * d;
        }
        return 0.5 * s + constant;
    }

    void gradient_into(std::span<const double> x, std::span<double> out) const {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = h[i] * (x[i] - center[i]);
    }

    Vector gradient(std::span<const double> x) const {
        Vector g(x.size());
        gradient_into(x, g);
        return g;
    }
};

// argmin over the ball of 0.5 * sum h_i (x_i - c_i)^2 (h_i >= 0).
// Outside the ball the KKT point is x_i = h_i c_i / (h_i + lambda) with ||x|| = R.
inline Vector argmin_diag_quadratic_on_ball(std::span<const double> h, std::span<const double> c,
                                            const Domain& domain) {
    Vector x(c.begin(), c.end());
    if (!domain.bounded() || vec::norm(c) <= *domain.radius) return x;
    const double R = *domain.radius;
    const double hmax = *std::max_element(h.begin(), h.end());
    auto at = [&](double lambda) {
        for (std::size_t i = 0; i < c.size(); ++i) x[i] = (h[i] + lambda > 0.0) ? h[i] * c[i] / (h[i] + lambda) : 0.0;
        return vec::norm(x);
    };
    double lo = 0.0, hi = hmax * vec::norm(c) / R + 1e-300;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (at(mid) > R ? lo : hi) = mid;
    }
    at(hi);
    project_in_place(x, domain);
    return x;
}

struct BallMaximum {
    double value = 0.0;
    Vector argmax;
};

// max over ||x|| <= R of sum_i q_i (x_i - w_i)^2 with q_i >= 0. The maximizer lies on the sphere
// and satisfies Q(x - w) = lambda x with lambda >= max q (trust-region optimality for the max).
inline BallMaximum max_diag_quadratic_on_ball(std::span<const double> q, std::span<const double> w, double R) {
    const std::size_t d = q.size();
    BallMaximum out{0.0, Vector(d, 0.0)};
    const double qmax = *std::max_element(q.begin(), q.end());
    if (qmax <= 0.0) return out;

    auto eval = [&](const Vector& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += q[i] * (x[i] - w[i]) * (x[i] - w[i]);
        return s;
    };

    // Hard case: no weight of w on the top eigen-directions.
    bool hard = true;
    for (std::size_t i = 0; i < d; ++i)
        if (q[i] == qmax && w[i] != 0.0) hard = false;
    if (hard) {
        Vector x(d, 0.0);
        std::size_t top = d;
        for (std::size_t i = 0; i < d; ++i) {
            if (q[i] == qmax) {
                if (top == d) top = i;
            } else {
                x[i] = -q[i] * w[i] / (qmax - q[i]);
            }
        }
        const double rest = vec::sq_norm(x);
        if (rest <= R * R) {
            x[top] = std::sqrt(R * R - rest);
            out.argmax = x;
            out.value = eval(x);
            return out;
        }
    }

    Vector x(d);
    auto at = [&](double lambda) {
        for (std::size_t i = 0; i < d; ++i) x[i] = -q[i] * w[i] / (lambda - q[i]);
        return vec::norm(x);
    };
    double lo = qmax, hi = qmax + qmax * vec::norm(w) / R + 1e-300;
    for (int it = 0; it < 300 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (at(mid) > R ? lo : hi) = mid;
    }
    at(hi);
    const double n = vec::norm(x);
    if (n > 0.0)
        for (double& v : x) v *= R / n;
    out.argmax = x;
    out.value = eval(x);
    return out;
}

}  // namespace fedsea
