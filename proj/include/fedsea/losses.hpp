#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>

#include "fedsea/core.hpp"
#include "fedsea/geometry.hpp"
#include "fedsea/rng.hpp"

namespace fedsea {

// One observation xi. For mean_quadratic `features` is the point itself; for the regression
// families it is the covariate a and `target` is b (linreg) or the label y in {-1, +1} (logistic).
struct Sample {
    Vector features;
    double target = 0.0;
};

inline const char* to_string(LossFamily f) {
    switch (f) {
        case LossFamily::mean_quadratic: return "mean_quadratic";
        case LossFamily::gaussian_linreg: return "gaussian_linreg";
        case LossFamily::empirical_logistic: return "empirical_logistic";
    }
    return "?";
}

// A stochastic loss f(x, xi) whose functional form is shared by every client and step; the
// adversary only moves DistParams. The mean of DistParams is the quadratic's center (mean_quadratic)
// or the regression truth w (linreg, logistic); its variance is the point spread (mean_quadratic)
// or the label noise variance (linreg). Logistic ignores the variance.
class LossModel {
public:
    LossModel(LossFamily family, std::size_t dimension, Vector covariate_variances = {}, bool convex_only = false)
        : family_(family), dimension_(dimension), cov_(std::move(covariate_variances)) {
        if (dimension_ < 1) throw ConfigError("dimension must be >= 1");
        if (family_ == LossFamily::mean_quadratic) {
            L_ = 1.0;
            mu_ = 1.0;
        } else {
            if (cov_.empty()) cov_.assign(dimension_, 1.0);
            if (cov_.size() != dimension_) throw ConfigError("covariate_variances must have one entry per dimension");
            if (!std::all_of(cov_.begin(), cov_.end(), [](double v) { return v > 0.0 && std::isfinite(v); }))
                throw ConfigError("covariate_variances must be positive");
            const double lmax = *std::max_element(cov_.begin(), cov_.end());
            const double lmin = *std::min_element(cov_.begin(), cov_.end());
            if (family_ == LossFamily::gaussian_linreg) {
                L_ = lmax;
                mu_ = lmin;
            } else {
                L_ = lmax / 4.0;
                mu_ = 0.0;
            }
        }
        if (convex_only) mu_ = 0.0;
    }

    static LossModel from_spec(const LossSpec& spec, std::size_t dimension) {
        return LossModel(spec.family, dimension, spec.covariate_variances, spec.convex_only);
    }

    LossFamily family() const { return family_; }
    std::size_t dimension() const { return dimension_; }
    double L() const { return L_; }
    double mu() const { return mu_; }
    const Vector& covariate_variances() const { return cov_; }
    bool has_analytic_expectation() const { return family_ != LossFamily::empirical_logistic; }

    // Curvature of every expected loss; fixed because the family and covariate law are fixed.
    Vector curvature() const {
        return family_ == LossFamily::mean_quadratic ? Vector(dimension_, 1.0) : cov_;
    }

private:
    LossFamily family_;
    std::size_t dimension_;
    Vector cov_;
    double L_ = 1.0;
    double mu_ = 0.0;
};

namespace detail {

inline void check_dim(const LossModel& model, std::span<const double> x) {
    if (x.size() != model.dimension())
        throw Error("dimension mismatch: expected " + std::to_string(model.dimension()) + ", got " +
                    std::to_string(x.size()));
}

// log(1 + exp(-z)) without overflow.
inline double log1p_exp_neg(double z) { return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace detail

// Fill `out` with one draw of xi ~ D(params). `out.features` must already have size d.
inline void draw_sample_into(const LossModel& model, const DistParams& params, RngStream& stream, Sample& out) {
    switch (model.family()) {
        case LossFamily::mean_quadratic:
            sample_into(stream, params, out.features);
            out.target = 0.0;
            return;
        case LossFamily::gaussian_linreg: {
            const auto& cov = model.covariate_variances();
            for (std::size_t i = 0; i < cov.size(); ++i) out.features[i] = std::sqrt(cov[i]) * stream.normal();
            out.target = vec::dot(out.features, params.mean);
            if (params.variance > 0.0) out.target += std::sqrt(params.variance) * stream.normal();
            return;
        }
        case LossFamily::empirical_logistic: {
            const auto& cov = model.covariate_variances();
            for (std::size_t i = 0; i < cov.size(); ++i) out.features[i] = std::sqrt(cov[i]) * stream.normal();
            const double p = detail::sigmoid(vec::dot(out.features, params.mean));
            out.target = stream.uniform() < p ? 1.0 : -1.0;
            return;
        }
    }
}

inline Sample draw_sample(const LossModel& model, const DistParams& params, RngStream& stream) {
    Sample s{Vector(model.dimension()), 0.0};
    draw_sample_into(model, params, stream, s);
    return s;
}

inline double sample_loss(const LossModel& model, std::span<const double> x, const Sample& s) {
    switch (model.family()) {
        case LossFamily::mean_quadratic: return 0.5 * vec::sq_dist(x, s.features);
        case LossFamily::gaussian_linreg: {
            const double r = vec::dot(s.features, x) - s.target;
            return 0.5 * r * r;
        }
        case LossFamily::empirical_logistic:
            return detail::log1p_exp_neg(s.target * vec::dot(s.features, x));
    }
    return 0.0;
}

inline void stochastic_gradient_into(const LossModel& model, std::span<const double> x, const Sample& s,
                                     std::span<double> out) {
    switch (model.family()) {
        case LossFamily::mean_quadratic:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - s.features[i];
            return;
        case LossFamily::gaussian_linreg: {
            const double r = vec::dot(s.features, x) - s.target;
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = r * s.features[i];
            return;
        }
        case LossFamily::empirical_logistic: {
            const double c = -s.target * detail::sigmoid(-s.target * vec::dot(s.features, x));
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * s.features[i];
            return;
        }
    }
}

inline Vector stochastic_gradient(const LossModel& model, std::span<const double> x, const Sample& s) {
    detail::check_dim(model, x);
    if (s.features.size() != model.dimension()) throw Error("dimension mismatch between sample and model");
    Vector g(x.size());
    stochastic_gradient_into(model, x, s, g);
    return g;
}

// f_{t,m}(x) = E[f(x, xi)] as a separable quadratic.
//   mean_quadratic: 0.5 ||x - mean||^2 + 0.5 variance
//   gaussian_linreg: 0.5 (x - w)^T diag(cov) (x - w) + 0.5 noise variance
inline DiagQuadratic expected_loss_form(const LossModel& model, const DistParams& params) {
    if (!model.has_analytic_expectation())
        throw AnalyticUnavailable(std::string(to_string(model.family())) +
                                  " has no closed-form expected loss; use the Monte Carlo oracle");
    return DiagQuadratic{model.curvature(), params.mean, 0.5 * params.variance};
}

inline double expected_loss(const LossModel& model, const DistParams& params, std::span<const double> x) {
    detail::check_dim(model, x);
    return expected_loss_form(model, params).value(x);
}

inline Vector expected_gradient(const LossModel& model, const DistParams& params, std::span<const double> x) {
    detail::check_dim(model, x);
    return expected_loss_form(model, params).gradient(x);
}

// E||grad f(x, xi) - grad f_{t,m}(x)||^2 at a point.
// For a ~ N(0, S), u = x - w and noise variance s2 (Isserlis):
//   (u^T S u) tr S + u^T S^2 u + s2 tr S.
inline double gradient_variance(const LossModel& model, const DistParams& params, std::span<const double> x) {
    detail::check_dim(model, x);
    switch (model.family()) {
        case LossFamily::mean_quadratic: return params.variance;
        case LossFamily::gaussian_linreg: {
            const auto& S = model.covariate_variances();
            const double tr = std::accumulate(S.begin(), S.end(), 0.0);
            double uSu = 0.0, uS2u = 0.0;
            for (std::size_t i = 0; i < S.size(); ++i) {
                const double u = x[i] - params.mean[i];
                uSu += S[i] * u * u;
                uS2u += S[i] * S[i] * u * u;
            }
            return uSu * tr + uS2u + params.variance * tr;
        }
        case LossFamily::empirical_logistic: break;
    }
    throw AnalyticUnavailable("empirical_logistic has no closed-form gradient variance");
}

struct VarianceBound {
    double value = 0.0;
    bool exact = true;  // false: a certified upper bound rather than the supremum
};

// sigma_{t,m}^2 as the supremum of gradient_variance over the domain.
// Logistic gradients satisfy ||grad|| <= ||a||, so tr(S) bounds the variance everywhere.
inline VarianceBound gradient_variance_sup(const LossModel& model, const DistParams& params, const Domain& domain) {
    switch (model.family()) {
        case LossFamily::mean_quadratic: return {params.variance, true};
        case LossFamily::gaussian_linreg: {
            if (!domain.bounded())
                throw DomainError("bounded-variance assumption violated on unbounded domain");
            const auto& S = model.covariate_variances();
            const double tr = std::accumulate(S.begin(), S.end(), 0.0);
            Vector q(S.size());
            for (std::size_t i = 0; i < S.size(); ++i) q[i] = tr * S[i] + S[i] * S[i];
            const auto best = max_diag_quadratic_on_ball(q, params.mean, *domain.radius);
            return {best.value + params.variance * tr, true};
        }
        case LossFamily::empirical_logistic: {
            const auto& S = model.covariate_variances();
            return {std::accumulate(S.begin(), S.end(), 0.0), false};
        }
    }
    return {};
}

}  // namespace fedsea
