#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsea {

// ---------------------------------------------------------------------------
// Errors. The category doubles as the process exit code of the CLI.
// ---------------------------------------------------------------------------

enum class ErrorCategory : int { generic = 1, config = 2, divergence = 3, audit = 4 };

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, ErrorCategory category = ErrorCategory::generic)
        : std::runtime_error(what), category_(category) {}
    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what, ErrorCategory::config) {}
};

struct DivergenceError : Error {
    explicit DivergenceError(const std::string& what) : Error(what, ErrorCategory::divergence) {}
};

struct AuditFailure : Error {
    explicit AuditFailure(const std::string& what) : Error(what, ErrorCategory::audit) {}
};

// Closed-form expectation requested from a family that has none.
struct AnalyticUnavailable : Error {
    explicit AnalyticUnavailable(const std::string& what) : Error(what) {}
};

// A quantity is undefined on the configured domain (e.g. a supremum over an unbounded set).
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(what) {}
};

struct SolverError : Error {
    explicit SolverError(const std::string& what) : Error(what) {}
};

// ---------------------------------------------------------------------------
// Dense vectors. Dimension is fixed per experiment; all hot loops work on spans.
// ---------------------------------------------------------------------------

using Vector = std::vector<double>;

namespace vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sq_norm(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(sq_norm(a)); }

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

inline Vector zeros(std::size_t d) { return Vector(d, 0.0); }

}  // namespace vec

// Neumaier compensated sum; reductions that must not depend on thread count go through this.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

// Mean and standard error of the mean; se = 0 for a single observation.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_and_se(std::span<const double> xs) {
    MeanSe out;
    if (xs.empty()) return out;
    const double n = static_cast<double>(xs.size());
    out.mean = compensated_sum(xs) / n;
    if (xs.size() < 2) return out;
    CompensatedSum ss;
    for (double x : xs) ss.add((x - out.mean) * (x - out.mean));
    out.se = std::sqrt(ss.value() / (n - 1.0) / n);
    return out;
}

// ---------------------------------------------------------------------------
// Feasible set: a centered Euclidean ball, or all of R^d.
// ---------------------------------------------------------------------------

struct Domain {
    std::optional<double> radius;  // nullopt = unbounded

    static Domain unbounded() { return {}; }
    static Domain ball(double r) { return Domain{r}; }
    bool bounded() const { return radius.has_value(); }
    bool operator==(const Domain&) const = default;
};

// ---------------------------------------------------------------------------
// Experiment configuration.
// ---------------------------------------------------------------------------

enum class StepSizeKind { constant, theory_convex, decaying_strongly_convex, custom_sequence };

struct StepSizePolicy {
    StepSizeKind kind = StepSizeKind::theory_convex;
    double eta = 0.0;            // constant
    std::vector<double> etas;    // custom_sequence
    bool unsafe = false;         // skip the theory caps (ablation runs)
    bool operator==(const StepSizePolicy&) const = default;
};

enum class LossFamily { mean_quadratic, gaussian_linreg, empirical_logistic };

struct LossSpec {
    LossFamily family = LossFamily::mean_quadratic;
    // Diagonal of E[a a^T] for the regression families.
    std::vector<double> covariate_variances;
    // Report mu = 0 even when the family is strongly convex.
    bool convex_only = false;
    // Frozen-sample size per distinct distribution for families without closed-form expectations.
    std::size_t surrogate_samples = 2000;
    bool operator==(const LossSpec&) const = default;
};

enum class AdversaryKind {
    static_iid,
    static_heterogeneous,
    drifting_means,
    cyclic_means,
    piecewise_shift,
    dirac_adversarial
};

// Parameters for every schedule kind; which fields are read depends on `kind`.
// Per-client lists are indexed cyclically by client, so one schedule can serve several M.
struct AdversarySpec {
    AdversaryKind kind = AdversaryKind::static_iid;
    std::vector<Vector> means;           // static_iid: [mean]; static_heterogeneous: per client
    Vector base;                         // drifting / cyclic
    Vector velocity;                     // drifting
    Vector amplitude;                    // cyclic
    std::size_t period = 2;              // cyclic
    std::vector<std::size_t> shift_times;  // piecewise: first step of segments 2..n
    std::vector<Vector> segments;        // piecewise segment means
    std::vector<Vector> points;          // dirac: point at step t is points[(t-1) % size]
    std::vector<Vector> client_offsets;  // optional per-client additive offsets
    std::vector<double> variances{1.0};  // one value, or per client
    bool operator==(const AdversarySpec&) const = default;
};

struct ExperimentConfig {
    std::size_t num_clients = 1;
    std::size_t horizon = 1;
    std::size_t sync_period = 1;
    std::size_t dimension = 1;
    StepSizePolicy step_size;
    Domain domain;
    std::size_t replicates = 1;
    std::uint64_t seed = 0;
    LossSpec loss;
    AdversarySpec adversary;
    std::optional<Vector> initial_point;     // default: origin
    std::optional<double> initial_distance;  // D override; default ||x_1 - x*||
    // Averaging happens after step t when (t - 1) mod tau == sync_phase.
    std::size_t sync_phase = 0;
    std::size_t mc_budget = 100000;
    bool operator==(const ExperimentConfig&) const = default;

    Vector start_point() const { return initial_point.value_or(vec::zeros(dimension)); }

    bool is_sync_step(std::size_t t) const { return (t - 1) % sync_period == sync_phase; }

    void validate() const {
        if (num_clients < 1) throw ConfigError("num_clients must be >= 1");
        if (horizon < 1) throw ConfigError("horizon must be >= 1");
        if (sync_period < 1) throw ConfigError("sync_period must be >= 1");
        if (dimension < 1) throw ConfigError("dimension must be >= 1");
        if (replicates < 1) throw ConfigError("replicates must be >= 1");
        if (sync_period > horizon) throw ConfigError("sync_period must not exceed horizon");
        if (sync_phase >= sync_period) throw ConfigError("sync_phase must be < sync_period");
        if (domain.bounded() && !(*domain.radius > 0.0 && std::isfinite(*domain.radius)))
            throw ConfigError("projection_radius must be positive and finite");
        if (initial_point) {
            if (initial_point->size() != dimension)
                throw ConfigError("initial_point dimension mismatch");
            if (!vec::all_finite(*initial_point)) throw ConfigError("initial_point must be finite");
            if (domain.bounded() && vec::norm(*initial_point) > *domain.radius * (1.0 + 1e-12))
                throw ConfigError("initial_point lies outside the feasible ball");
        }
        if (initial_distance && !(*initial_distance >= 0.0 && std::isfinite(*initial_distance)))
            throw ConfigError("initial_distance must be finite and >= 0");
    }
};

// ---------------------------------------------------------------------------
// Step sizes.
// ---------------------------------------------------------------------------

struct ModelConstants {
    double L = 1.0;
    double mu = 0.0;
    double D = 0.0;             // ||x_1 - x*||
    double sigma_sq_bar = 0.0;
    double K_sq_bar = 0.0;
};

namespace detail {

inline constexpr double cap_slack = 1.0 + 1e-12;

// min{1/(8L), 1/(4 sqrt6 L (tau-1))}; the second term is absent when tau == 1.
inline double constant_step_cap(double L, std::size_t tau) {
    double cap = 1.0 / (8.0 * L);
    if (tau > 1) cap = std::min(cap, 1.0 / (4.0 * std::sqrt(6.0) * L * static_cast<double>(tau - 1)));
    return cap;
}

// 1/(4L(tau-1)), infinite for tau == 1.
inline double drift_step_cap(double L, std::size_t tau) {
    if (tau <= 1) return std::numeric_limits<double>::infinity();
    return 1.0 / (4.0 * L * static_cast<double>(tau - 1));
}

}  // namespace detail

inline std::vector<double> resolve_step_sizes(const ExperimentConfig& config, const ModelConstants& k) {
    const std::size_t T = config.horizon;
    const std::size_t tau = config.sync_period;
    const auto& policy = config.step_size;
    if (!(k.L > 0.0) || !std::isfinite(k.L) || !std::isfinite(k.mu) || !std::isfinite(k.D) ||
        !std::isfinite(k.sigma_sq_bar) || !std::isfinite(k.K_sq_bar))
        throw ConfigError("model constants must be finite with L > 0");

    std::vector<double> etas(T);
    switch (policy.kind) {
        case StepSizeKind::constant: {
            if (!(policy.eta > 0.0) || !std::isfinite(policy.eta))
                throw ConfigError("constant step size must be positive");
            if (!policy.unsafe && policy.eta > detail::constant_step_cap(k.L, tau) * detail::cap_slack)
                throw ConfigError("step size violates theory precondition (eta <= min{1/(8L), 1/(4*sqrt(6)*L*(tau-1))})");
            std::fill(etas.begin(), etas.end(), policy.eta);
            break;
        }
        case StepSizeKind::theory_convex: {
            const double M = static_cast<double>(config.num_clients);
            const double tm1 = static_cast<double>(std::max<std::size_t>(tau - 1, 1));
            double eta = std::min(1.0 / (8.0 * k.L), 1.0 / (4.0 * std::sqrt(6.0) * k.L * tm1));
            const double denom = static_cast<double>(T) * (k.sigma_sq_bar / M + k.L * k.K_sq_bar);
            if (denom > 0.0 && k.D > 0.0) eta = std::min(eta, k.D / std::sqrt(denom));
            std::fill(etas.begin(), etas.end(), eta);
            break;
        }
        case StepSizeKind::decaying_strongly_convex: {
            if (!(k.mu > 0.0)) throw ConfigError("decaying step-size policy requires mu > 0");
            const double cap = detail::drift_step_cap(k.L, tau);
            for (std::size_t t = 1; t <= T; ++t)
                etas[t - 1] = std::min(2.0 / (k.mu * static_cast<double>(t)), cap);
            break;
        }
        case StepSizeKind::custom_sequence: {
            if (policy.etas.size() != T) throw ConfigError("custom step-size sequence must have length T");
            etas = policy.etas;
            for (std::size_t t = 0; t < T; ++t) {
                if (!(etas[t] > 0.0) || !std::isfinite(etas[t]))
                    throw ConfigError("custom step sizes must be positive");
                if (t > 0 && etas[t] > etas[t - 1])
                    throw ConfigError("custom step sizes must be non-increasing");
            }
            if (!policy.unsafe && etas.front() > detail::drift_step_cap(k.L, tau) * detail::cap_slack)
                throw ConfigError("step size violates theory precondition (eta_t <= 1/(4L(tau-1)))");
            break;
        }
    }
    return etas;
}

}  // namespace fedsea
