#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsea/core.hpp"
#include "fedsea/engine.hpp"
#include "fedsea/losses.hpp"
#include "fedsea/oracles.hpp"
#include "fedsea/rng.hpp"

namespace fedsea {

// ---------------------------------------------------------------------------
// Regret bounds, unit leading constants.
// ---------------------------------------------------------------------------

struct Theorem1Terms {
    double init_term = 0.0;       // D^2 / eta
    double variance_term = 0.0;   // T eta (sigma^2/M + L K^2)
    double spatial_drift = 0.0;   // T eta^2 L (tau-1) (sigma^2 + (tau-1) zeta^2)
    double temporal_drift = 0.0;  // T eta^2 L^2 (tau-1)^2 K^2
    double sum() const { return init_term + variance_term + spatial_drift + temporal_drift; }
};

inline Theorem1Terms evaluate_theorem1(const HeterogeneityProfile& p, const ExperimentConfig& config, double L,
                                       double eta, double D) {
    const double T = static_cast<double>(config.horizon);
    const double M = static_cast<double>(config.num_clients);
    const double tm1 = static_cast<double>(config.sync_period - 1);
    Theorem1Terms out;
    out.init_term = D * D / eta;
    out.variance_term = T * eta * (p.sigma_sq_bar / M + L * p.K_sq_bar);
    out.spatial_drift = T * eta * eta * L * tm1 * (p.sigma_sq_bar + tm1 * p.zeta_sq_bar);
    out.temporal_drift = T * eta * eta * L * L * tm1 * tm1 * p.K_sq_bar;
    return out;
}

// Smallest t >= 1 with 4L/(mu t) + 288 L^3 (tau-1)^2 / (mu^3 t^2) < 1/2.
inline std::size_t theorem2_t0(double L, double mu, std::size_t tau) {
    if (!(mu > 0.0)) throw ConfigError("t0 requires mu > 0");
    const double a = 4.0 * L / mu;
    const double tm1 = static_cast<double>(tau - 1);
    const double b = 288.0 * L * L * L * tm1 * tm1 / (mu * mu * mu);
    auto holds = [&](double t) { return a / t + b / (t * t) < 0.5; };
    // a/t + b/t^2 < 1/2  <=>  t > a + sqrt(a^2 + 2b)
    double t = std::max(1.0, std::floor(a + std::sqrt(a * a + 2.0 * b)));
    while (t > 1.0 && holds(t - 1.0)) t -= 1.0;
    while (!holds(t)) t += 1.0;
    return static_cast<std::size_t>(t);
}

// The max-of-ceilings expression for t0 used when bounding the head of the sum.
inline std::size_t theorem2_t0_ceiling_form(double L, double mu, std::size_t tau) {
    if (!(mu > 0.0)) throw ConfigError("t0 requires mu > 0");
    const double tm1 = static_cast<double>(tau - 1);
    const double first = std::ceil(8.0 * L * tm1 * tm1 / mu);
    const double second = std::ceil(4.0 * L / mu * (1.0 + std::sqrt(1.0 + 36.0 * L * tm1 * tm1 / mu)));
    return static_cast<std::size_t>(std::max({1.0, first, second}));
}

struct Theorem2Terms {
    double log_term = 0.0;    // (sigma_max^2/M + L K_max^2)(1 + log T)/mu
    double drift_term = 0.0;  // L^2 tau (sigma_max^2 + tau zeta_max^2 + tau L K_max^2)/mu^3
    std::size_t t0 = 1;
    std::size_t t0_ceiling_form = 1;
    std::optional<double> E_head;  // measured head of the sum, when trajectories were supplied
    double E_head_cap = 0.0;       // L D^2 / 2
    double kappa = 0.0;
    double sum() const { return log_term + drift_term + E_head.value_or(E_head_cap); }
};

// `virtual_gap` holds the replicate-averaged f_t(x_t) - f_t(x*) for t = 1..T (may be empty).
inline Theorem2Terms evaluate_theorem2(const HeterogeneityProfile& p, const ExperimentConfig& config, double L,
                                       double mu, double D, std::span<const double> virtual_gap = {}) {
    if (!(mu > 0.0)) throw ConfigError("Theorem 2 bound requires mu > 0");
    const double T = static_cast<double>(config.horizon);
    const double M = static_cast<double>(config.num_clients);
    const double tau = static_cast<double>(config.sync_period);
    const double tm1 = tau - 1.0;
    Theorem2Terms out;
    out.log_term = (p.sigma_sq_max / M + L * p.K_sq_max) * (1.0 + std::log(T)) / mu;
    out.drift_term = L * L * tau * (p.sigma_sq_max + tau * p.zeta_sq_max + tau * L * p.K_sq_max) / (mu * mu * mu);
    out.t0 = theorem2_t0(L, mu, config.sync_period);
    out.t0_ceiling_form = theorem2_t0_ceiling_form(L, mu, config.sync_period);
    out.E_head_cap = L * D * D / 2.0;
    out.kappa = L / mu;
    if (!virtual_gap.empty()) {
        CompensatedSum s;
        const std::size_t stop = std::min<std::size_t>(out.t0 - 1, virtual_gap.size());
        for (std::size_t t = 1; t <= stop; ++t) {
            const double td = static_cast<double>(t);
            const double w = L / (mu * td) + L * L * L * tm1 * tm1 / (mu * mu * mu * td * td);
            s.add(w * virtual_gap[t - 1]);
        }
        out.E_head = s.value();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lemma audits.
// ---------------------------------------------------------------------------

struct Lemma1Verdict {
    bool pass = true;
    std::size_t steps = 0;
    std::size_t failures = 0;
    double max_violation = 0.0;  // max (LHS - RHS) / (1 + |RHS|), negative when slack everywhere
    double max_abs_gap = 0.0;    // max |LHS - RHS| / (1 + |RHS|)
};

// Per step: (1/M) sum_m f_t(x_{t,m}) - f_t(x*) <= f_t(x_t) - f_t(x*) + (L/2) V_t.
inline Lemma1Verdict audit_lemma1(const Trace& trace, const ComparatorSet& comparators, double L) {
    Lemma1Verdict v;
    v.max_violation = -std::numeric_limits<double>::infinity();
    const std::size_t M = trace.num_clients;
    for (std::size_t t = 1; t <= trace.horizon; ++t) {
        const auto r = trace.record(t);
        const double fstar = comparators.loss_at_best[t - 1];
        const double lhs = compensated_sum(r.expected_loss) / static_cast<double>(M) - fstar;
        const double rhs = r.virtual_loss - fstar + 0.5 * L * r.consensus;
        const double scaled = (lhs - rhs) / (1.0 + std::abs(rhs));
        v.max_violation = std::max(v.max_violation, scaled);
        v.max_abs_gap = std::max(v.max_abs_gap, std::abs(scaled));
        if (scaled > 1e-9) ++v.failures;
        ++v.steps;
    }
    v.pass = v.failures == 0;
    return v;
}

struct Lemma2Verdict {
    bool pass = false;
    std::size_t t = 0;
    double estimate = 0.0;   // E_t || (1/M) sum_m g_{t,m} ||^2
    double std_error = 0.0;
    double rhs = 0.0;        // 10 sigma_t^2/M + 2 L^2 V_t + 4 L (f_t(x_t) - f_t(x_t*))
    // Decomposition of the mean gradient into the part from evaluating every sample at x_t
    // (gbar) and the drift part g - gbar.
    double virtual_part = 0.0;
    double drift_part = 0.0;
};

// Monte Carlo check on a frozen state: resample every xi_{t,m} `budget` times.
inline Lemma2Verdict audit_lemma2(const SimState& state, const LossModel& model, const AdversarySchedule& schedule,
                                  const ExpectedLossOracle& oracle, const ComparatorSet& comparators,
                                  const HeterogeneityProfile& profile, std::size_t budget, std::uint64_t seed) {
    if (budget < 2) throw Error("Lemma 2 audit needs a budget of at least 2");
    const std::size_t t = state.t, M = state.num_clients, d = state.dimension;
    const double L = oracle.smoothness();
    Lemma2Verdict v;
    v.t = t;
    std::vector<DistParams> params;
    for (std::size_t m = 1; m <= M; ++m) params.push_back(schedule.dist_params(t, m));

    std::vector<double> values(budget), virt(budget), drift(budget);
    Sample s{Vector(d), 0.0};
    Vector g(d), gbar(d), sum_g(d), sum_gbar(d);
    for (std::size_t k = 0; k < budget; ++k) {
        std::fill(sum_g.begin(), sum_g.end(), 0.0);
        std::fill(sum_gbar.begin(), sum_gbar.end(), 0.0);
        for (std::size_t m = 0; m < M; ++m) {
            RngStream stream({seed, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(t),
                              static_cast<std::uint32_t>(m + 1), DrawPurpose::lemma2_audit});
            draw_sample_into(model, params[m], stream, s);
            stochastic_gradient_into(model, state.client(m), s, g);
            stochastic_gradient_into(model, state.virtual_average, s, gbar);
            for (std::size_t i = 0; i < d; ++i) {
                sum_g[i] += g[i];
                sum_gbar[i] += gbar[i];
            }
        }
        const double inv = 1.0 / static_cast<double>(M);
        double a = 0.0, b = 0.0, c = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double gi = sum_g[i] * inv, bi = sum_gbar[i] * inv;
            a += gi * gi;
            b += bi * bi;
            c += (gi - bi) * (gi - bi);
        }
        values[k] = a;
        virt[k] = b;
        drift[k] = c;
    }
    const MeanSe est = mean_and_se(values);
    v.estimate = est.mean;
    v.std_error = est.se;
    v.virtual_part = mean_and_se(virt).mean;
    v.drift_part = mean_and_se(drift).mean;

    const double gap = oracle.global_loss(t, state.virtual_average) - comparators.loss_at_step_optimum[t - 1];
    v.rhs = 10.0 * profile.sigma_sq[t - 1] / static_cast<double>(M) + 2.0 * L * L * consensus_error(state) +
            4.0 * L * gap;
    if (v.std_error > 0.0 && v.std_error > 0.1 * v.rhs)
        throw Error("insufficient Monte Carlo budget for Lemma 2 audit at t=" + std::to_string(t));
    v.pass = v.estimate <= v.rhs + 5.0 * v.std_error;
    return v;
}

struct Lemma3Verdict {
    bool pass = false;
    std::size_t replicates = 0;
    double lhs = 0.0;  // replicate mean of sum_t V_t
    double lhs_std_error = 0.0;
    double rhs = 0.0;
};

inline constexpr std::size_t kLemma3MinReplicates = 32;

// sum_t E[V_t] <= 4 eta^2 (tau-1) sum_t (sigma_t^2 + 3 (tau-1) zeta_t^2)
//               + 12 eta^2 (tau-1)^2 L sum_t E[f_t(x_t) - f_t(x_t*)]
// `sum_consensus` and `sum_gap` hold one value per replicate.
inline Lemma3Verdict audit_lemma3(std::span<const double> sum_consensus, std::span<const double> sum_gap,
                                  const HeterogeneityProfile& profile, const ExperimentConfig& config, double L,
                                  double eta) {
    if (config.sync_period > 1 && eta > detail::drift_step_cap(L, config.sync_period) * detail::cap_slack)
        throw ConfigError("Lemma 3 audit requires eta <= 1/(4L(tau-1))");
    if (sum_consensus.size() < kLemma3MinReplicates || sum_gap.size() != sum_consensus.size())
        throw Error("Lemma 3 audit needs at least 32 replicates");
    const double tm1 = static_cast<double>(config.sync_period - 1);
    CompensatedSum drift_sources;
    for (std::size_t i = 0; i < profile.sigma_sq.size(); ++i)
        drift_sources.add(profile.sigma_sq[i] + 3.0 * tm1 * profile.zeta_sq[i]);
    const MeanSe lhs = mean_and_se(sum_consensus);
    const MeanSe gap = mean_and_se(sum_gap);
    Lemma3Verdict v;
    v.replicates = sum_consensus.size();
    v.lhs = lhs.mean;
    v.lhs_std_error = lhs.se;
    v.rhs = 4.0 * eta * eta * tm1 * drift_sources.value() + 12.0 * eta * eta * tm1 * tm1 * L * gap.mean;
    v.pass = v.lhs <= v.rhs + 5.0 * v.lhs_std_error;
    return v;
}

struct MovingTargetSplit {
    double virtual_regret_sum = 0.0;  // sum_t f_t(x_t) - f_t(x*)
    double K_sum = 0.0;               // sum_t f_t(x*) - f_t(x_t*)
    double total = 0.0;               // sum_t f_t(x_t) - f_t(x_t*)
    double relative_error = 0.0;
};

inline MovingTargetSplit moving_target_split(const Trace& trace, const ComparatorSet& comparators) {
    CompensatedSum a, k, total;
    for (std::size_t t = 1; t <= trace.horizon; ++t) {
        const double fx = trace.virtual_loss[t - 1];
        const double fb = comparators.loss_at_best[t - 1];
        const double fo = comparators.loss_at_step_optimum[t - 1];
        a.add(fx - fb);
        k.add(fb - fo);
        total.add(fx - fo);
    }
    MovingTargetSplit out{a.value(), k.value(), total.value(), 0.0};
    out.relative_error = std::abs(out.virtual_regret_sum + out.K_sum - out.total) / std::max(1.0, std::abs(out.total));
    if (out.relative_error > 1e-9) throw AuditFailure("moving-target split identity violated");
    return out;
}

// ---------------------------------------------------------------------------
// Report.
// ---------------------------------------------------------------------------

struct BoundReport {
    std::optional<Theorem1Terms> theorem1;
    std::optional<Theorem2Terms> theorem2;
    double empirical_regret = 0.0;
    double empirical_regret_std_error = 0.0;
    double D = 0.0;
    std::optional<Lemma1Verdict> lemma1;  // aggregated over replicates
    std::optional<Lemma3Verdict> lemma3;
    std::vector<Lemma2Verdict> lemma2;
    double max_split_error = 0.0;
};

// Merge per-replicate Lemma 1 verdicts.
inline Lemma1Verdict merge(const Lemma1Verdict& a, const Lemma1Verdict& b) {
    Lemma1Verdict out;
    out.steps = a.steps + b.steps;
    out.failures = a.failures + b.failures;
    out.max_violation = a.steps == 0 ? b.max_violation : (b.steps == 0 ? a.max_violation : std::max(a.max_violation, b.max_violation));
    out.max_abs_gap = std::max(a.max_abs_gap, b.max_abs_gap);
    out.pass = out.failures == 0;
    return out;
}

}  // namespace fedsea
