#pragma once

// Independent reference implementations used to cross-check the library: a centralized online
// SGD loop for the mean-quadratic family and brute-force Monte Carlo estimators of the
// heterogeneity constants. They share only the random number generator and the schedule's
// distribution parameters with the code under test.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "fedsea/adversary.hpp"
#include "fedsea/core.hpp"
#include "fedsea/rng.hpp"

namespace fedsea::reference {

struct CentralizedRun {
    std::vector<Vector> iterates;  // x_1 .. x_T, each before its update
    std::vector<double> expected_losses;  // 0.5 ||x_t - mean_t||^2 + 0.5 var_t
};

// x_{t+1} = x_t - eta_t (x_t - xi_t), xi_t ~ N(mean_t, var_t / d * I), drawn from the data stream of
// client 1 so that it lines up with a single-client federated run.
inline CentralizedRun centralized_sgd_mean_quadratic(Vector x, const AdversarySchedule& schedule,
                                                     std::span<const double> etas, std::uint64_t seed,
                                                     std::uint32_t replicate) {
    const std::size_t d = x.size();
    CentralizedRun run;
    Vector xi(d);
    for (std::size_t t = 1; t <= etas.size(); ++t) {
        const DistParams p = schedule.dist_params(t, 1);
        run.iterates.push_back(x);
        double loss = 0.0;
        for (std::size_t i = 0; i < d; ++i) loss += (x[i] - p.mean[i]) * (x[i] - p.mean[i]);
        run.expected_losses.push_back(0.5 * loss + 0.5 * p.variance);

        RngStream stream({seed, replicate, static_cast<std::uint32_t>(t), 1, DrawPurpose::data});
        const double sd = std::sqrt(p.variance / static_cast<double>(d));
        for (std::size_t i = 0; i < d; ++i) xi[i] = p.variance > 0.0 ? p.mean[i] + sd * stream.normal() : p.mean[i];
        for (std::size_t i = 0; i < d; ++i) x[i] = x[i] - etas[t - 1] * (x[i] - xi[i]);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Brute-force estimators for the mean-quadratic family, f(x, xi) = 0.5 ||x - xi||^2.
// Gradients come from central differences of sampled losses ("Monte Carlo differences").
// ---------------------------------------------------------------------------

inline double sample_loss(std::span<const double> x, std::span<const double> xi) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - xi[i]) * (x[i] - xi[i]);
    return 0.5 * s;
}

inline void fd_gradient(std::span<const double> x, std::span<const double> xi, std::span<double> out, double h = 1e-3) {
    Vector xp(x.begin(), x.end()), xm(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        out[i] = (sample_loss(xp, xi) - sample_loss(xm, xi)) / (2.0 * h);
        xp[i] = xm[i] = x[i];
    }
}

inline void draw(RngStream& stream, const DistParams& p, std::span<double> out) {
    const double sd = std::sqrt(p.variance / static_cast<double>(out.size()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.variance > 0.0 ? p.mean[i] + sd * stream.normal() : p.mean[i];
}

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline Estimate summarize(const std::vector<double>& xs) {
    const MeanSe m = mean_and_se(xs);
    return {m.mean, m.se};
}

// (1/M) sum_m ||grad f_{t,m}(x) - grad f_t(x)||^2 at one point. Each of `pairs` replications
// uses two independent batches A, B and the product of their centered gradients, which is
// unbiased for the squared gap.
inline Estimate gradient_gap(const AdversarySchedule& schedule, std::size_t t, std::span<const double> x,
                             std::size_t pairs, std::size_t batch, std::uint64_t seed) {
    const std::size_t M = schedule.num_clients(), d = x.size();
    std::vector<double> values;
    Vector xi(d), g(d);
    for (std::size_t k = 0; k < pairs; ++k) {
        std::vector<Vector> mean_grad[2];
        for (int half = 0; half < 2; ++half) {
            for (std::size_t m = 1; m <= M; ++m) {
                const DistParams p = schedule.dist_params(t, m);
                RngStream stream({seed, static_cast<std::uint32_t>(2 * k + half), static_cast<std::uint32_t>(t),
                                  static_cast<std::uint32_t>(m), DrawPurpose::self_test});
                Vector acc(d, 0.0);
                for (std::size_t n = 0; n < batch; ++n) {
                    draw(stream, p, xi);
                    fd_gradient(x, xi, g);
                    for (std::size_t i = 0; i < d; ++i) acc[i] += g[i] / static_cast<double>(batch);
                }
                mean_grad[half].push_back(acc);
            }
        }
        double s = 0.0;
        Vector ca(d, 0.0), cb(d, 0.0);
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t i = 0; i < d; ++i) {
                ca[i] += mean_grad[0][m][i] / static_cast<double>(M);
                cb[i] += mean_grad[1][m][i] / static_cast<double>(M);
            }
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t i = 0; i < d; ++i) s += (mean_grad[0][m][i] - ca[i]) * (mean_grad[1][m][i] - cb[i]);
        values.push_back(s / static_cast<double>(M));
    }
    return summarize(values);
}

// f_t(a) - f_t(b) from common samples.
inline Estimate loss_difference(const AdversarySchedule& schedule, std::size_t t, std::span<const double> a,
                                std::span<const double> b, std::size_t samples, std::uint64_t seed) {
    const std::size_t M = schedule.num_clients(), d = a.size();
    std::vector<double> values(samples, 0.0);
    Vector xi(d);
    for (std::size_t m = 1; m <= M; ++m) {
        const DistParams p = schedule.dist_params(t, m);
        RngStream stream({seed, 7, static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(m), DrawPurpose::self_test});
        for (std::size_t n = 0; n < samples; ++n) {
            draw(stream, p, xi);
            values[n] += (sample_loss(a, xi) - sample_loss(b, xi)) / static_cast<double>(M);
        }
    }
    return summarize(values);
}

// (1/M) sum_m E||g - E g||^2 at x, from per-client sample variances.
inline Estimate gradient_variance(const AdversarySchedule& schedule, std::size_t t, std::span<const double> x,
                                  std::size_t samples, std::uint64_t seed) {
    const std::size_t M = schedule.num_clients(), d = x.size();
    double value = 0.0, var_of_mean = 0.0;
    Vector xi(d);
    for (std::size_t m = 1; m <= M; ++m) {
        const DistParams p = schedule.dist_params(t, m);
        RngStream stream({seed, 11, static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(m), DrawPurpose::self_test});
        std::vector<Vector> grads(samples, Vector(d));
        Vector mean(d, 0.0);
        for (auto& g : grads) {
            draw(stream, p, xi);
            fd_gradient(x, xi, g);
            for (std::size_t i = 0; i < d; ++i) mean[i] += g[i] / static_cast<double>(samples);
        }
        std::vector<double> z;
        const double n = static_cast<double>(samples);
        for (const auto& g : grads) {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += (g[i] - mean[i]) * (g[i] - mean[i]);
            z.push_back(s * n / (n - 1.0));
        }
        const Estimate e = summarize(z);
        value += e.value / static_cast<double>(M);
        var_of_mean += e.std_error * e.std_error / static_cast<double>(M * M);
    }
    return {value, std::sqrt(var_of_mean)};
}

// Uniform point on the sphere of radius R.
inline Vector boundary_point(RngStream& stream, std::size_t d, double R) {
    Vector x(d);
    double n = 0.0;
    while (n == 0.0) {
        for (double& v : x) v = stream.normal();
        n = vec::norm(x);
    }
    for (double& v : x) v *= R / n;
    return x;
}

}  // namespace fedsea::reference
