#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fedsea/adversary.hpp"
#include "fedsea/core.hpp"
#include "fedsea/geometry.hpp"
#include "fedsea/losses.hpp"
#include "fedsea/rng.hpp"

namespace fedsea {

// Expected local and global losses f_{t,m}, f_t. Analytic families are exact; the logistic family
// is evaluated on a frozen sample drawn once per distinct distribution, and that frozen surrogate
// is the experiment's ground truth for regret, comparators and heterogeneity alike.
class ExpectedLossOracle {
public:
    ExpectedLossOracle(const LossModel& model, const AdversarySchedule& schedule, std::uint64_t seed,
                       std::size_t surrogate_samples = 2000)
        : model_(model), T_(schedule.horizon()), M_(schedule.num_clients()), d_(schedule.dimension()),
          smoothness_(model.L()) {
        if (model_.has_analytic_expectation())
            build_analytic(schedule);
        else
            build_surrogate(schedule, seed, surrogate_samples);
    }

    const LossModel& model() const { return model_; }
    std::size_t horizon() const { return T_; }
    std::size_t num_clients() const { return M_; }
    std::size_t dimension() const { return d_; }
    bool analytic() const { return model_.has_analytic_expectation(); }

    // Smoothness of every f_{t,m} as evaluated by this oracle. A frozen sample's second moment can
    // exceed the population one, so the surrogate constant may be larger than the model's L.
    double smoothness() const { return smoothness_; }

    double global_loss(std::size_t t, std::span<const double> x) const {
        if (analytic()) return global_forms_[t - 1].value(x);
        double s = 0.0;
        for (const auto& [id, w] : step_terms_[t - 1]) s += w * surrogate_loss(id, x);
        return s;
    }

    void global_gradient_into(std::size_t t, std::span<const double> x, std::span<double> out) const {
        if (analytic()) return global_forms_[t - 1].gradient_into(x, out);
        std::fill(out.begin(), out.end(), 0.0);
        Vector g(d_);
        for (const auto& [id, w] : step_terms_[t - 1]) {
            surrogate_gradient_into(id, x, g);
            for (std::size_t i = 0; i < d_; ++i) out[i] += w * g[i];
        }
    }

    Vector global_gradient(std::size_t t, std::span<const double> x) const {
        Vector g(d_);
        global_gradient_into(t, x, g);
        return g;
    }

    double local_loss(std::size_t t, std::size_t m, std::span<const double> x) const {
        if (analytic()) return local_forms_[(t - 1) * M_ + (m - 1)].value(x);
        return surrogate_loss(dist_ids_[(t - 1) * M_ + (m - 1)], x);
    }

    void local_gradient_into(std::size_t t, std::size_t m, std::span<const double> x, std::span<double> out) const {
        if (analytic()) return local_forms_[(t - 1) * M_ + (m - 1)].gradient_into(x, out);
        surrogate_gradient_into(dist_ids_[(t - 1) * M_ + (m - 1)], x, out);
    }

    const DiagQuadratic& global_form(std::size_t t) const { return global_forms_.at(t - 1); }
    const DiagQuadratic& local_form(std::size_t t, std::size_t m) const { return local_forms_.at((t - 1) * M_ + (m - 1)); }

    // Surrogate bookkeeping (non-analytic families only).
    std::size_t num_distributions() const { return surrogates_.size(); }
    std::size_t dist_id(std::size_t t, std::size_t m) const { return dist_ids_[(t - 1) * M_ + (m - 1)]; }
    const std::vector<std::pair<std::size_t, double>>& step_terms(std::size_t t) const { return step_terms_[t - 1]; }

    double surrogate_loss(std::size_t id, std::span<const double> x) const {
        const auto& s = surrogates_[id];
        double acc = 0.0;
        for (std::size_t k = 0; k < s.labels.size(); ++k)
            acc += detail::log1p_exp_neg(s.labels[k] * vec::dot({s.features.data() + k * d_, d_}, x));
        return acc / static_cast<double>(s.labels.size());
    }

    void surrogate_gradient_into(std::size_t id, std::span<const double> x, std::span<double> out) const {
        const auto& s = surrogates_[id];
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < s.labels.size(); ++k) {
            const std::span<const double> a{s.features.data() + k * d_, d_};
            const double y = s.labels[k];
            const double c = -y * detail::sigmoid(-y * vec::dot(a, x));
            for (std::size_t i = 0; i < d_; ++i) out[i] += c * a[i];
        }
        for (double& v : out) v /= static_cast<double>(s.labels.size());
    }

    // H += weight * Hessian of the surrogate at x (row-major d x d).
    void surrogate_hessian_add(std::size_t id, std::span<const double> x, double weight, std::vector<double>& H) const {
        const auto& s = surrogates_[id];
        const double scale = weight / static_cast<double>(s.labels.size());
        for (std::size_t k = 0; k < s.labels.size(); ++k) {
            const std::span<const double> a{s.features.data() + k * d_, d_};
            const double p = detail::sigmoid(s.labels[k] * vec::dot(a, x));
            const double c = scale * p * (1.0 - p);
            for (std::size_t i = 0; i < d_; ++i)
                for (std::size_t j = 0; j < d_; ++j) H[i * d_ + j] += c * a[i] * a[j];
        }
    }

private:
    struct FrozenSample {
        std::vector<double> features;  // n x d
        std::vector<double> labels;
    };

    void build_analytic(const AdversarySchedule& schedule) {
        const Vector h = model_.curvature();
        local_forms_.reserve(T_ * M_);
        global_forms_.reserve(T_);
        for (std::size_t t = 1; t <= T_; ++t) {
            Vector center(d_, 0.0);
            for (std::size_t m = 1; m <= M_; ++m) {
                local_forms_.push_back(expected_loss_form(model_, schedule.dist_params(t, m)));
                // running mean: exact when every center is the same
                const auto& c = local_forms_.back().center;
                for (std::size_t i = 0; i < d_; ++i) center[i] += (c[i] - center[i]) / static_cast<double>(m);
            }
            // mean of local constants plus the spread of the local centers around the global one
            double k = 0.0;
            for (std::size_t m = 0; m < M_; ++m) {
                const auto& f = local_forms_[(t - 1) * M_ + m];
                double spread = 0.0;
                for (std::size_t i = 0; i < d_; ++i) spread += h[i] * (f.center[i] - center[i]) * (f.center[i] - center[i]);
                k += f.constant + 0.5 * spread;
            }
            global_forms_.push_back(DiagQuadratic{h, std::move(center), k / static_cast<double>(M_)});
        }
    }

    void build_surrogate(const AdversarySchedule& schedule, std::uint64_t seed, std::size_t n) {
        if (n < 1) throw ConfigError("surrogate_samples must be >= 1");
        std::map<Vector, std::size_t> index;
        dist_ids_.resize(T_ * M_);
        step_terms_.resize(T_);
        for (std::size_t t = 1; t <= T_; ++t) {
            for (std::size_t m = 1; m <= M_; ++m) {
                const DistParams p = schedule.dist_params(t, m);
                Vector key = p.mean;
                key.push_back(p.variance);
                auto [it, inserted] = index.try_emplace(std::move(key), surrogates_.size());
                if (inserted) {
                    FrozenSample fs{std::vector<double>(n * d_), std::vector<double>(n)};
                    RngStream stream({seed, 0, static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(m),
                                      DrawPurpose::surrogate});
                    Sample s{Vector(d_), 0.0};
                    for (std::size_t k = 0; k < n; ++k) {
                        draw_sample_into(model_, p, stream, s);
                        std::copy(s.features.begin(), s.features.end(), fs.features.begin() + k * d_);
                        fs.labels[k] = s.target;
                    }
                    // logistic curvature is at most 1/4 of the empirical second moment
                    Eigen::MatrixXd A = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                        fs.features.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d_));
                    const Eigen::MatrixXd S = A.transpose() * A / static_cast<double>(n);
                    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
                    smoothness_ = std::max(smoothness_, 0.25 * lmax * (1.0 + 1e-12));
                    surrogates_.push_back(std::move(fs));
                }
                dist_ids_[(t - 1) * M_ + (m - 1)] = it->second;
                auto& terms = step_terms_[t - 1];
                auto found = std::find_if(terms.begin(), terms.end(), [&](const auto& e) { return e.first == it->second; });
                if (found == terms.end())
                    terms.emplace_back(it->second, 1.0 / static_cast<double>(M_));
                else
                    found->second += 1.0 / static_cast<double>(M_);
            }
        }
    }

    LossModel model_;
    std::size_t T_, M_, d_;
    double smoothness_;
    std::vector<DiagQuadratic> local_forms_;   // T x M
    std::vector<DiagQuadratic> global_forms_;  // T
    std::vector<FrozenSample> surrogates_;
    std::vector<std::size_t> dist_ids_;  // T x M
    std::vector<std::vector<std::pair<std::size_t, double>>> step_terms_;
};

// ---------------------------------------------------------------------------
// Comparators x* and x_t*.
// ---------------------------------------------------------------------------

enum class ComparatorMethod { closed_form, offline_solver, monte_carlo_solver };

inline const char* to_string(ComparatorMethod m) {
    switch (m) {
        case ComparatorMethod::closed_form: return "closed_form";
        case ComparatorMethod::offline_solver: return "offline_solver";
        case ComparatorMethod::monte_carlo_solver: return "monte_carlo_solver";
    }
    return "?";
}

struct ComparatorSet {
    Vector best_in_hindsight;            // x*
    std::vector<Vector> per_step_optima;  // x_t*
    ComparatorMethod method = ComparatorMethod::closed_form;
    double best_residual = 0.0;      // first-order optimality residual of x*
    double max_step_residual = 0.0;  // worst residual over the x_t*
    std::vector<double> loss_at_best;           // f_t(x*)
    std::vector<double> loss_at_step_optimum;   // f_t(x_t*)
};

namespace detail {

// First-order optimality residual on the domain: the gradient norm in the interior, and on the
// sphere the tangential gradient plus any outward-pointing part.
inline double optimality_residual(std::span<const double> x, std::span<const double> grad, const Domain& domain) {
    const double g = vec::norm(grad);
    if (!domain.bounded()) return g;
    const double R = *domain.radius;
    if (vec::norm(x) < R * (1.0 - 1e-9)) return g;
    const double radial = vec::dot(grad, x) / (R * R);
    Vector tang(grad.begin(), grad.end());
    for (std::size_t i = 0; i < tang.size(); ++i) tang[i] -= radial * x[i];
    return vec::norm(tang) + std::max(0.0, radial * R);
}

// Solve the d x d system A z = b by Gaussian elimination with partial pivoting.
inline bool solve_dense(std::vector<double> A, Vector b, Vector& z) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r * n + c]) > std::abs(A[piv * n + c])) piv = r;
        if (!(std::abs(A[piv * n + c]) > 1e-300)) return false;
        if (piv != c) {
            for (std::size_t k = 0; k < n; ++k) std::swap(A[c * n + k], A[piv * n + k]);
            std::swap(b[c], b[piv]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = A[r * n + c] / A[c * n + c];
            for (std::size_t k = c; k < n; ++k) A[r * n + k] -= f * A[c * n + k];
            b[r] -= f * b[c];
        }
    }
    z.assign(n, 0.0);
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) s -= A[c * n + k] * z[k];
        z[c] = s / A[c * n + c];
    }
    return true;
}

// Weighted mixture of surrogate losses, minimized over the domain. Damped Newton in the
// interior; projected gradient with backtracking when the unconstrained optimum leaves the ball.
inline Vector minimize_surrogate_mixture(const ExpectedLossOracle& oracle,
                                         const std::vector<std::pair<std::size_t, double>>& terms,
                                         std::span<const double> x0, const Domain& domain, double tol,
                                         std::size_t max_iter = 100000) {
    const std::size_t d = oracle.dimension();
    auto value = [&](std::span<const double> x) {
        double s = 0.0;
        for (const auto& [id, w] : terms) s += w * oracle.surrogate_loss(id, x);
        return s;
    };
    auto gradient = [&](std::span<const double> x, Vector& g) {
        g.assign(d, 0.0);
        Vector gi(d);
        for (const auto& [id, w] : terms) {
            oracle.surrogate_gradient_into(id, x, gi);
            for (std::size_t i = 0; i < d; ++i) g[i] += w * gi[i];
        }
    };

    Vector x(x0.begin(), x0.end()), g(d), step(d), trial(d);
    bool newton_ok = true;
    for (std::size_t it = 0; it < max_iter; ++it) {
        gradient(x, g);
        if (vec::norm(g) <= tol) break;
        std::vector<double> H(d * d, 0.0);
        for (const auto& [id, w] : terms) oracle.surrogate_hessian_add(id, x, w, H);
        Vector neg(g);
        for (double& v : neg) v = -v;
        if (!solve_dense(H, neg, step) || vec::dot(step, g) >= 0.0) step = neg;
        const double f0 = value(x);
        double a = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, a *= 0.5) {
            for (std::size_t i = 0; i < d; ++i) trial[i] = x[i] + a * step[i];
            if (value(trial) <= f0 + 1e-4 * a * vec::dot(step, g)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            newton_ok = vec::norm(g) <= tol * 10.0;
            break;
        }
        x = trial;
        if (vec::norm(x) > 1e12) {
            newton_ok = false;
            break;
        }
    }
    gradient(x, g);
    const bool inside = !domain.bounded() || vec::norm(x) <= *domain.radius;
    if (newton_ok && inside && vec::norm(g) <= tol) return x;
    if (!domain.bounded()) throw SolverError("comparator solver did not converge (unconstrained surrogate objective)");

    // Projected gradient descent from the projection of the start point.
    x.assign(x0.begin(), x0.end());
    project_in_place(x, domain);
    double alpha = 1.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        gradient(x, g);
        if (optimality_residual(x, g, domain) <= tol) return x;
        const double f0 = value(x);
        for (int ls = 0; ls < 80; ++ls) {
            for (std::size_t i = 0; i < d; ++i) trial[i] = x[i] - alpha * g[i];
            project_in_place(trial, domain);
            if (value(trial) <= f0 - vec::sq_dist(trial, x) / (2.0 * alpha)) break;
            alpha *= 0.5;
        }
        if (vec::sq_dist(trial, x) == 0.0) break;
        x = trial;
        alpha *= 2.0;
    }
    gradient(x, g);
    if (optimality_residual(x, g, domain) <= tol) return x;
    throw SolverError("comparator solver did not converge within the iteration budget");
}

}  // namespace detail

inline ComparatorSet compute_comparators(const ExpectedLossOracle& oracle, const Domain& domain,
                                         std::span<const double> x1) {
    const std::size_t T = oracle.horizon(), d = oracle.dimension();
    ComparatorSet out;
    out.per_step_optima.resize(T);
    out.loss_at_best.resize(T);
    out.loss_at_step_optimum.resize(T);

    // Tolerance for x*: relative to the cumulative gradient at the start point.
    Vector g(d), G(d, 0.0);
    for (std::size_t t = 1; t <= T; ++t) {
        oracle.global_gradient_into(t, x1, g);
        for (std::size_t i = 0; i < d; ++i) G[i] += g[i];
    }
    const double best_tol = 1e-8 * std::max(1.0, vec::norm(G));

    if (oracle.analytic()) {
        // All forms share the curvature h, so sum_t f_t is centered at the mean of the centers.
        const Vector& h = oracle.global_form(1).h;
        Vector center(d, 0.0);
        for (std::size_t t = 1; t <= T; ++t)
            for (std::size_t i = 0; i < d; ++i)
                center[i] += (oracle.global_form(t).center[i] - center[i]) / static_cast<double>(t);
        out.best_in_hindsight = argmin_diag_quadratic_on_ball(h, center, domain);
        bool interior = vec::norm(center) <= domain.radius.value_or(INFINITY);
        for (std::size_t t = 1; t <= T; ++t) {
            const auto& c = oracle.global_form(t).center;
            out.per_step_optima[t - 1] = argmin_diag_quadratic_on_ball(h, c, domain);
            interior = interior && vec::norm(c) <= domain.radius.value_or(INFINITY);
        }
        out.method = interior ? ComparatorMethod::closed_form : ComparatorMethod::offline_solver;
    } else {
        std::vector<std::pair<std::size_t, double>> all;
        std::map<std::size_t, double> weights;
        for (std::size_t t = 1; t <= T; ++t)
            for (const auto& [id, w] : oracle.step_terms(t)) weights[id] += w;
        all.assign(weights.begin(), weights.end());
        out.best_in_hindsight = detail::minimize_surrogate_mixture(oracle, all, x1, domain, best_tol);
        std::map<std::vector<std::pair<std::size_t, double>>, Vector> cache;
        for (std::size_t t = 1; t <= T; ++t) {
            const auto& terms = oracle.step_terms(t);
            auto it = cache.find(terms);
            if (it == cache.end()) {
                oracle.global_gradient_into(t, x1, g);
                const double tol = 1e-8 * std::max(1.0, vec::norm(g));
                it = cache.emplace(terms, detail::minimize_surrogate_mixture(oracle, terms, x1, domain, tol)).first;
            }
            out.per_step_optima[t - 1] = it->second;
        }
        out.method = ComparatorMethod::monte_carlo_solver;
    }

    // Residual checks.
    std::fill(G.begin(), G.end(), 0.0);
    for (std::size_t t = 1; t <= T; ++t) {
        oracle.global_gradient_into(t, out.best_in_hindsight, g);
        for (std::size_t i = 0; i < d; ++i) G[i] += g[i];
        out.loss_at_best[t - 1] = oracle.global_loss(t, out.best_in_hindsight);
        const auto& xt = out.per_step_optima[t - 1];
        out.loss_at_step_optimum[t - 1] = oracle.global_loss(t, xt);
        oracle.global_gradient_into(t, xt, g);
        const double r = detail::optimality_residual(xt, g, domain);
        oracle.global_gradient_into(t, x1, g);
        if (r > 1e-8 * std::max(1.0, vec::norm(g)))
            throw SolverError("per-step comparator residual too large at t=" + std::to_string(t));
        out.max_step_residual = std::max(out.max_step_residual, r);
    }
    out.best_residual = detail::optimality_residual(out.best_in_hindsight, G, domain);
    if (out.best_residual > best_tol) throw SolverError("best-in-hindsight comparator residual too large");
    return out;
}

// ---------------------------------------------------------------------------
// Heterogeneity.
// ---------------------------------------------------------------------------

struct SpatialHeterogeneity {
    double value = 0.0;
    bool exact = true;  // false: a lower-bound witness from numerical search
    Vector witness;     // maximizing point for the approximate search
};

namespace detail {

// (1/M) sum_m ||grad f_{t,m}(x) - grad f_t(x)||^2
inline double gradient_gap(const ExpectedLossOracle& oracle, std::size_t t, std::span<const double> x) {
    const std::size_t M = oracle.num_clients(), d = oracle.dimension();
    std::vector<double> grads(M * d);
    Vector mean(d, 0.0);
    for (std::size_t m = 1; m <= M; ++m) {
        std::span<double> g{grads.data() + (m - 1) * d, d};
        oracle.local_gradient_into(t, m, x, g);
        for (std::size_t i = 0; i < d; ++i) mean[i] += g[i];
    }
    for (double& v : mean) v /= static_cast<double>(M);
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) s += vec::sq_dist({grads.data() + m * d, d}, mean);
    return s / static_cast<double>(M);
}

}  // namespace detail

inline constexpr std::size_t kZetaStarts = 32;
inline constexpr std::size_t kZetaBoundarySamples = 10000;

// zeta_t^2 = max over the domain of the mean squared local/global gradient gap.
// With a shared curvature the gap is H (c_bar - c_m) for every x, so the value is exact; otherwise
// multi-start projected ascent is cross-checked by boundary sampling and the larger value reported.
inline SpatialHeterogeneity spatial_heterogeneity(const ExpectedLossOracle& oracle, std::size_t t,
                                                  const Domain& domain, std::uint64_t seed = 0) {
    const std::size_t M = oracle.num_clients(), d = oracle.dimension();
    SpatialHeterogeneity out;
    if (oracle.analytic()) {
        const auto& global = oracle.global_form(t);
        double s = 0.0;
        for (std::size_t m = 1; m <= M; ++m) {
            const auto& local = oracle.local_form(t, m);
            for (std::size_t i = 0; i < d; ++i) {
                const double gap = global.h[i] * (global.center[i] - local.center[i]);
                s += gap * gap;
            }
        }
        out.value = s / static_cast<double>(M);
        return out;
    }
    if (!domain.bounded()) throw DomainError("zeta undefined on unbounded domain for x-dependent gradient gaps");
    const double R = *domain.radius;
    out.exact = false;
    out.witness.assign(d, 0.0);
    out.value = detail::gradient_gap(oracle, t, out.witness);
    auto consider = [&](const Vector& x) {
        const double v = detail::gradient_gap(oracle, t, x);
        if (v > out.value) {
            out.value = v;
            out.witness = x;
        }
        return v;
    };

    RngStream starts({seed, 0, static_cast<std::uint32_t>(t), 0, DrawPurpose::multistart});
    const double fd = 1e-6 * std::max(1.0, R);
    for (std::size_t s = 0; s < kZetaStarts; ++s) {
        Vector x(d);
        for (double& v : x) v = starts.normal();
        const double scale = R * std::pow(starts.uniform(), 1.0 / static_cast<double>(d)) / std::max(vec::norm(x), 1e-300);
        for (double& v : x) v *= scale;
        double hx = consider(x);
        double alpha = 0.1 * R;
        for (int it = 0; it < 60; ++it) {
            Vector grad(d);
            for (std::size_t i = 0; i < d; ++i) {
                Vector xp = x, xm = x;
                xp[i] += fd;
                xm[i] -= fd;
                grad[i] = (detail::gradient_gap(oracle, t, xp) - detail::gradient_gap(oracle, t, xm)) / (2.0 * fd);
            }
            const double gn = vec::norm(grad);
            if (gn == 0.0) break;
            bool improved = false;
            for (int ls = 0; ls < 30; ++ls) {
                Vector y = x;
                for (std::size_t i = 0; i < d; ++i) y[i] += alpha * grad[i] / gn;
                project_in_place(y, domain);
                const double hy = detail::gradient_gap(oracle, t, y);
                if (hy > hx) {
                    x = y;
                    hx = hy;
                    improved = true;
                    alpha *= 1.5;
                    break;
                }
                alpha *= 0.5;
            }
            if (!improved) break;
        }
        consider(x);
    }

    RngStream boundary({seed, 0, static_cast<std::uint32_t>(t), 0, DrawPurpose::boundary_sampling});
    for (std::size_t s = 0; s < kZetaBoundarySamples; ++s) {
        Vector x(d);
        for (double& v : x) v = boundary.normal();
        const double n = vec::norm(x);
        if (n == 0.0) continue;
        for (double& v : x) v *= R / n;
        consider(x);
    }
    return out;
}

// K_t^2 = f_t(x*) - f_t(x_t*); non-negative by optimality of x_t*.
inline double temporal_heterogeneity(const ComparatorSet& comparators, std::size_t t) {
    const double fb = comparators.loss_at_best[t - 1];
    const double k = fb - comparators.loss_at_step_optimum[t - 1];
    if (k < -1e-9 * (1.0 + std::abs(fb)))
        throw SolverError("negative temporal heterogeneity at t=" + std::to_string(t) + ": comparator solver failure");
    return std::max(0.0, k);
}

struct VarianceProfile {
    std::vector<double> sigma_sq;  // sigma_t^2
    bool exact = true;
};

// sigma_t^2 = (1/M) sum_m sigma_{t,m}^2, each the supremum over the domain.
inline VarianceProfile variance_profile(const LossModel& model, const AdversarySchedule& schedule, const Domain& domain) {
    const std::size_t T = schedule.horizon(), M = schedule.num_clients();
    VarianceProfile out;
    out.sigma_sq.resize(T);
    std::map<Vector, VarianceBound> cache;
    for (std::size_t t = 1; t <= T; ++t) {
        double s = 0.0;
        for (std::size_t m = 1; m <= M; ++m) {
            const DistParams p = schedule.dist_params(t, m);
            VarianceBound b;
            if (model.family() == LossFamily::gaussian_linreg) {
                Vector key = p.mean;
                key.push_back(p.variance);
                auto it = cache.find(key);
                if (it == cache.end()) it = cache.emplace(key, gradient_variance_sup(model, p, domain)).first;
                b = it->second;
            } else {
                b = gradient_variance_sup(model, p, domain);
            }
            s += b.value;
            out.exact = out.exact && b.exact;
        }
        out.sigma_sq[t - 1] = s / static_cast<double>(M);
    }
    return out;
}

struct HeterogeneityProfile {
    std::vector<double> zeta_sq;
    std::vector<double> K_sq;
    std::vector<double> sigma_sq;
    double zeta_sq_bar = 0.0, K_sq_bar = 0.0, sigma_sq_bar = 0.0;
    double zeta_sq_max = 0.0, K_sq_max = 0.0, sigma_sq_max = 0.0;
    bool zeta_exact = true;
    bool sigma_exact = true;
    Domain domain;              // domain the suprema were taken over
    bool visited_ball = false;  // domain is the smallest ball containing the visited iterates
};

inline void finalize_profile(HeterogeneityProfile& p) {
    const double T = static_cast<double>(p.zeta_sq.size());
    p.zeta_sq_bar = compensated_sum(p.zeta_sq) / T;
    p.K_sq_bar = compensated_sum(p.K_sq) / T;
    p.sigma_sq_bar = compensated_sum(p.sigma_sq) / T;
    p.zeta_sq_max = *std::max_element(p.zeta_sq.begin(), p.zeta_sq.end());
    p.K_sq_max = *std::max_element(p.K_sq.begin(), p.K_sq.end());
    p.sigma_sq_max = *std::max_element(p.sigma_sq.begin(), p.sigma_sq.end());
}

inline HeterogeneityProfile heterogeneity_profile(const ExpectedLossOracle& oracle, const AdversarySchedule& schedule,
                                                  const ComparatorSet& comparators, const Domain& domain,
                                                  std::uint64_t seed = 0) {
    const std::size_t T = oracle.horizon();
    HeterogeneityProfile p;
    p.domain = domain;
    p.zeta_sq.resize(T);
    p.K_sq.resize(T);
    std::map<std::vector<std::pair<std::size_t, double>>, SpatialHeterogeneity> cache;
    for (std::size_t t = 1; t <= T; ++t) {
        SpatialHeterogeneity z;
        if (oracle.analytic()) {
            z = spatial_heterogeneity(oracle, t, domain, seed);
        } else {
            // zeta depends only on the per-client distributions at t
            std::vector<std::pair<std::size_t, double>> key;
            for (std::size_t m = 1; m <= oracle.num_clients(); ++m) key.emplace_back(oracle.dist_id(t, m), 0.0);
            auto it = cache.find(key);
            if (it == cache.end()) it = cache.emplace(key, spatial_heterogeneity(oracle, t, domain, seed)).first;
            z = it->second;
        }
        p.zeta_sq[t - 1] = z.value;
        p.zeta_exact = p.zeta_exact && z.exact;
        p.K_sq[t - 1] = temporal_heterogeneity(comparators, t);
    }
    auto var = variance_profile(oracle.model(), schedule, domain);
    p.sigma_sq = std::move(var.sigma_sq);
    p.sigma_exact = var.exact;
    finalize_profile(p);
    return p;
}

// ---------------------------------------------------------------------------
// Monte Carlo expectation.
// ---------------------------------------------------------------------------

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

inline MonteCarloEstimate mc_expected_loss(const LossModel& model, const DistParams& params, std::span<const double> x,
                                           std::size_t budget, const StreamKey& key) {
    if (budget < 1000) throw Error("Monte Carlo budget must be >= 1000");
    RngStream stream(key);
    Sample s{Vector(model.dimension()), 0.0};
    std::vector<double> values(budget);
    for (std::size_t k = 0; k < budget; ++k) {
        draw_sample_into(model, params, stream, s);
        values[k] = sample_loss(model, x, s);
    }
    const MeanSe ms = mean_and_se(values);
    return {ms.mean, ms.se};
}

}  // namespace fedsea
