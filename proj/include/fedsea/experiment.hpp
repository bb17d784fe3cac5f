#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fedsea/adversary.hpp"
#include "fedsea/bounds.hpp"
#include "fedsea/config_io.hpp"
#include "fedsea/core.hpp"
#include "fedsea/engine.hpp"
#include "fedsea/fit.hpp"
#include "fedsea/losses.hpp"
#include "fedsea/oracles.hpp"
#include "fedsea/parallel.hpp"

namespace fedsea {

// Everything that is fixed before the first replicate: model, schedule, oracle, comparators,
// heterogeneity constants and the resolved step sizes.
struct PreparedExperiment {
    ExperimentConfig config;
    LossModel model;
    AdversarySchedule schedule;
    ExpectedLossOracle oracle;
    ComparatorSet comparators;
    // Empty when a supremum is undefined on the configured domain; filled after the run over the
    // ball of visited iterates.
    std::optional<HeterogeneityProfile> profile;
    double D = 0.0;
    std::vector<double> step_sizes;

    explicit PreparedExperiment(const ExperimentConfig& c)
        : config(validated(c)),
          model(LossModel::from_spec(c.loss, c.dimension)),
          schedule(c.adversary, c.num_clients, c.horizon, c.dimension),
          oracle(model, schedule, c.seed, c.loss.surrogate_samples),
          comparators(compute_comparators(oracle, c.domain, c.start_point())) {
        const Vector x1 = config.start_point();
        D = config.initial_distance.value_or(std::sqrt(vec::sq_dist(x1, comparators.best_in_hindsight)));

        double sigma_bar = 0.0, K_bar = 0.0;
        try {
            profile = heterogeneity_profile(oracle, schedule, comparators, config.domain, config.seed);
            sigma_bar = profile->sigma_sq_bar;
            K_bar = profile->K_sq_bar;
        } catch (const DomainError& e) {
            // The step size only needs sigma and K; zeta can wait for the visited ball.
            std::vector<double> K(config.horizon);
            for (std::size_t t = 1; t <= config.horizon; ++t) K[t - 1] = temporal_heterogeneity(comparators, t);
            K_bar = compensated_sum(K) / static_cast<double>(config.horizon);
            try {
                const auto var = variance_profile(model, schedule, config.domain);
                sigma_bar = compensated_sum(var.sigma_sq) / static_cast<double>(config.horizon);
            } catch (const DomainError&) {
                if (config.step_size.kind == StepSizeKind::theory_convex)
                    throw ConfigError(std::string("theory_convex step size needs a finite gradient-variance constant: ") +
                                      e.what() + "; set projection_radius");
            }
        }
        step_sizes = resolve_step_sizes(config, ModelConstants{oracle.smoothness(), model.mu(), D, sigma_bar, K_bar});
    }

private:
    static const ExperimentConfig& validated(const ExperimentConfig& c) {
        c.validate();
        return c;
    }
};

struct ReplicateSummary {
    std::size_t replicate = 0;
    double regret = 0.0;
    double sum_consensus = 0.0;   // sum_t V_t
    double sum_gap_optimum = 0.0;  // sum_t f_t(x_t) - f_t(x_t*)
    double max_iterate_norm = 0.0;
    std::size_t projected_steps = 0;
    Lemma1Verdict lemma1;
    MovingTargetSplit split;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::uint64_t hash = 0;
    double L = 0.0, mu = 0.0, D = 0.0;
    ComparatorMethod comparator_method = ComparatorMethod::closed_form;
    double comparator_residual = 0.0;
    Vector best_in_hindsight;
    std::vector<double> step_sizes;
    std::vector<std::uint8_t> sync;
    // Replicate means per step.
    std::vector<double> regret_increment;  // (1/M) sum_m f_t(x_{t,m}) - f_t(x*)
    std::vector<double> regret_cum;
    std::vector<double> consensus;
    std::vector<double> virtual_gap;  // f_t(x_t) - f_t(x*)
    HeterogeneityProfile profile;
    std::vector<ReplicateSummary> replicates;
    double regret = 0.0;  // regret_cum.back()
    double regret_std_error = 0.0;
    BoundReport bounds;
    bool theory_compliant = true;
    std::vector<std::string> notes;
};

struct RunOptions {
    std::size_t threads = 0;  // 0: hardware concurrency
};

namespace detail {

inline bool constant_steps(const std::vector<double>& etas) {
    return std::all_of(etas.begin(), etas.end(), [&](double e) { return e == etas.front(); });
}

// Per-replicate per-step series, reduced in replicate order afterwards.
struct ReplicateSeries {
    std::vector<double> increment, consensus, virtual_gap;
    ReplicateSummary summary;
};

}  // namespace detail

inline ExperimentResult run_experiment(const PreparedExperiment& prep, const RunOptions& options = {}) {
    const auto& config = prep.config;
    const std::size_t T = config.horizon, M = config.num_clients, R = config.replicates;
    const auto& comp = prep.comparators;

    std::vector<detail::ReplicateSeries> series(R);
    parallel_for(R, options.threads, [&](std::size_t r) {
        const Trace tr = run_replicate(config, prep.model, prep.schedule, prep.step_sizes, prep.oracle,
                                       static_cast<std::uint32_t>(r));
        auto& s = series[r];
        s.increment.resize(T);
        s.virtual_gap.resize(T);
        s.consensus = tr.consensus;
        CompensatedSum regret, cons, gap;
        for (std::size_t t = 1; t <= T; ++t) {
            const auto rec = tr.record(t);
            const double fb = comp.loss_at_best[t - 1];
            s.increment[t - 1] = compensated_sum(rec.expected_loss) / static_cast<double>(M) - fb;
            s.virtual_gap[t - 1] = rec.virtual_loss - fb;
            regret.add(s.increment[t - 1]);
            cons.add(rec.consensus);
            gap.add(rec.virtual_loss - comp.loss_at_step_optimum[t - 1]);
        }
        s.summary.replicate = r;
        s.summary.regret = regret.value();
        s.summary.sum_consensus = cons.value();
        s.summary.sum_gap_optimum = gap.value();
        s.summary.max_iterate_norm = tr.max_iterate_norm;
        s.summary.projected_steps = tr.projected_steps();
        s.summary.lemma1 = audit_lemma1(tr, comp, prep.oracle.smoothness());
        s.summary.split = moving_target_split(tr, comp);
    });

    ExperimentResult out;
    out.config = config;
    out.hash = config_hash(config);
    out.L = prep.oracle.smoothness();
    out.mu = prep.model.mu();
    out.D = prep.D;
    out.comparator_method = comp.method;
    out.comparator_residual = comp.best_residual;
    out.best_in_hindsight = comp.best_in_hindsight;
    out.step_sizes = prep.step_sizes;
    out.sync.resize(T);
    for (std::size_t t = 1; t <= T; ++t) out.sync[t - 1] = config.is_sync_step(t) ? 1 : 0;

    out.regret_increment.resize(T);
    out.regret_cum.resize(T);
    out.consensus.resize(T);
    out.virtual_gap.resize(T);
    double running = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        CompensatedSum inc, cons, gap;
        for (std::size_t r = 0; r < R; ++r) {
            inc.add(series[r].increment[t]);
            cons.add(series[r].consensus[t]);
            gap.add(series[r].virtual_gap[t]);
        }
        out.regret_increment[t] = inc.value() / static_cast<double>(R);
        out.consensus[t] = cons.value() / static_cast<double>(R);
        out.virtual_gap[t] = gap.value() / static_cast<double>(R);
        running += out.regret_increment[t];
        out.regret_cum[t] = running;
    }
    out.regret = out.regret_cum.back();

    std::vector<double> totals, sum_v, sum_gap;
    Lemma1Verdict lemma1;
    double max_norm = 0.0;
    std::size_t projected = 0;
    for (auto& s : series) {
        out.replicates.push_back(s.summary);
        totals.push_back(s.summary.regret);
        sum_v.push_back(s.summary.sum_consensus);
        sum_gap.push_back(s.summary.sum_gap_optimum);
        lemma1 = merge(lemma1, s.summary.lemma1);
        max_norm = std::max(max_norm, s.summary.max_iterate_norm);
        projected += s.summary.projected_steps;
        out.bounds.max_split_error = std::max(out.bounds.max_split_error, s.summary.split.relative_error);
    }
    out.regret_std_error = mean_and_se(totals).se;

    if (prep.profile) {
        out.profile = *prep.profile;
    } else {
        const Domain visited = Domain::ball(std::max(max_norm, 1e-12));
        out.profile = heterogeneity_profile(prep.oracle, prep.schedule, comp, visited, config.seed);
        out.profile.visited_ball = true;
        out.notes.push_back("heterogeneity suprema taken over the ball of visited iterates (radius " +
                            std::to_string(max_norm) + ")");
    }
    if (!out.profile.zeta_exact) out.notes.push_back("zeta_t^2 is a numerical lower-bound witness");
    if (!out.profile.sigma_exact) out.notes.push_back("sigma_t^2 is a certified upper bound, not the supremum");

    out.theory_compliant = !config.step_size.unsafe && projected == 0;
    if (projected > 0) out.notes.push_back("projection active on " + std::to_string(projected) + " replicate-steps");

    auto& b = out.bounds;
    b.empirical_regret = out.regret;
    b.empirical_regret_std_error = out.regret_std_error;
    b.D = out.D;
    b.lemma1 = lemma1;
    if (detail::constant_steps(out.step_sizes)) {
        const double eta = out.step_sizes.front();
        b.theorem1 = evaluate_theorem1(out.profile, config, out.L, eta, out.D);
        const bool eta_ok = config.sync_period == 1 ||
                            eta <= detail::drift_step_cap(out.L, config.sync_period) * detail::cap_slack;
        if (R >= kLemma3MinReplicates && eta_ok)
            b.lemma3 = audit_lemma3(sum_v, sum_gap, out.profile, config, out.L, eta);
    }
    if (out.mu > 0.0) b.theorem2 = evaluate_theorem2(out.profile, config, out.L, out.mu, out.D, out.virtual_gap);
    return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {}) {
    return run_experiment(PreparedExperiment(config), options);
}

// ---------------------------------------------------------------------------
// Sweeps.
// ---------------------------------------------------------------------------

struct SweepAxis {
    std::string name;  // horizon, num_clients, sync_period, variance, amplitude, step_size
    std::vector<json> values;
};

struct SweepSpec {
    ExperimentConfig base;
    std::vector<SweepAxis> axes;
    std::size_t cell_cap = 10000;
};

inline SweepSpec sweep_from_json(const json& j) {
    try {
        detail::reject_unknown_keys(j, {"base", "axes", "replicates", "cell_cap"}, "sweep");
        SweepSpec s;
        s.base = config_from_json(detail::require(j, "base", "sweep"));
        if (j.contains("replicates")) s.base.replicates = detail::parse_count(j["replicates"], "replicates");
        if (j.contains("cell_cap")) s.cell_cap = detail::parse_count(j["cell_cap"], "cell_cap");
        const auto& axes = detail::require(j, "axes", "sweep");
        if (!axes.is_array()) throw ConfigError("sweep axes must be an array of {name, values}");
        for (const auto& a : axes) {
            detail::reject_unknown_keys(a, {"name", "values"}, "sweep axis");
            SweepAxis axis{detail::require(a, "name", "sweep axis").get<std::string>(), {}};
            const auto& v = detail::require(a, "values", "sweep axis");
            if (!v.is_array() || v.empty()) throw ConfigError("sweep axis values must be a non-empty array");
            axis.values.assign(v.begin(), v.end());
            s.axes.push_back(std::move(axis));
        }
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed sweep: ") + e.what());
    }
}

inline json to_json(const SweepSpec& s) {
    json axes = json::array();
    for (const auto& a : s.axes) axes.push_back({{"name", a.name}, {"values", a.values}});
    return {{"base", to_json(s.base)}, {"axes", axes}, {"cell_cap", s.cell_cap}};
}

// Scale every heterogeneity parameter of the schedule (cyclic amplitude, drift velocity, spread
// of heterogeneous means around their centroid, client offsets) by `factor`.
inline void scale_heterogeneity(AdversarySpec& a, double factor) {
    for (double& v : a.amplitude) v *= factor;
    for (double& v : a.velocity) v *= factor;
    for (auto& off : a.client_offsets)
        for (double& v : off) v *= factor;
    if (a.kind == AdversaryKind::static_heterogeneous && !a.means.empty()) {
        Vector centroid(a.means.front().size(), 0.0);
        for (const auto& m : a.means)
            for (std::size_t i = 0; i < m.size(); ++i) centroid[i] += m[i] / static_cast<double>(a.means.size());
        for (auto& m : a.means)
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = centroid[i] + factor * (m[i] - centroid[i]);
    }
}

inline void apply_axis(ExperimentConfig& c, const std::string& name, const json& value) {
    try {
        if (name == "horizon")
            c.horizon = detail::parse_count(value, "horizon");
        else if (name == "num_clients")
            c.num_clients = detail::parse_count(value, "num_clients");
        else if (name == "sync_period") {
            c.sync_period = detail::parse_count(value, "sync_period");
            c.sync_phase = std::min(c.sync_phase, c.sync_period > 0 ? c.sync_period - 1 : 0);
        } else if (name == "variance")
            c.adversary.variances = {detail::parse_real(value, "variance")};
        else if (name == "amplitude")
            scale_heterogeneity(c.adversary, detail::parse_real(value, "amplitude"));
        else if (name == "step_size")
            c.step_size = step_policy_from_json(value);
        else
            throw ConfigError("unknown sweep axis: " + name);
    } catch (const json::exception& e) {
        throw ConfigError("bad value for sweep axis " + name + ": " + e.what());
    }
}

inline std::string axis_value_label(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_object() && v.contains("kind")) {
        std::string s = v["kind"].get<std::string>();
        if (v.contains("eta")) s += "-" + v["eta"].dump();
        return s;
    }
    return v.dump();
}

struct SweepCell {
    std::vector<std::pair<std::string, json>> coords;
    std::string label;
    ExperimentResult result;
};

struct ScalingFit {
    std::string group;  // label of the non-horizon coordinates
    std::optional<FitResult> power;
    std::optional<FitResult> log;
    std::vector<std::string> errors;
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepCell> cells;
    std::vector<ScalingFit> fits;
};

inline std::vector<std::vector<std::pair<std::string, json>>> enumerate_cells(const SweepSpec& spec) {
    std::size_t count = 1;
    for (const auto& a : spec.axes) {
        if (a.values.empty()) throw ConfigError("sweep axis " + a.name + " has no values");
        if (count > spec.cell_cap / a.values.size() + 1) throw ConfigError("sweep exceeds the cell cap");
        count *= a.values.size();
    }
    if (count > spec.cell_cap) throw ConfigError("sweep has " + std::to_string(count) + " cells, above the cap of " +
                                                 std::to_string(spec.cell_cap));
    std::vector<std::vector<std::pair<std::string, json>>> cells;
    std::vector<std::size_t> idx(spec.axes.size(), 0);
    for (std::size_t n = 0; n < count; ++n) {
        std::vector<std::pair<std::string, json>> coords;
        for (std::size_t k = 0; k < spec.axes.size(); ++k) coords.emplace_back(spec.axes[k].name, spec.axes[k].values[idx[k]]);
        cells.push_back(std::move(coords));
        for (std::size_t k = spec.axes.size(); k-- > 0;) {  // last axis varies fastest
            if (++idx[k] < spec.axes[k].values.size()) break;
            idx[k] = 0;
        }
    }
    return cells;
}

inline std::vector<ScalingFit> fit_horizon_groups(const std::vector<SweepCell>& cells) {
    std::vector<ScalingFit> fits;
    std::vector<std::string> groups;
    std::vector<std::vector<const SweepCell*>> members;
    for (const auto& cell : cells) {
        bool has_horizon = false;
        std::string group;
        for (const auto& [name, v] : cell.coords) {
            if (name == "horizon") {
                has_horizon = true;
                continue;
            }
            if (!group.empty()) group += ",";
            group += name + "=" + axis_value_label(v);
        }
        if (!has_horizon) return {};
        auto it = std::find(groups.begin(), groups.end(), group);
        if (it == groups.end()) {
            groups.push_back(group);
            members.emplace_back();
            it = groups.end() - 1;
        }
        members[static_cast<std::size_t>(it - groups.begin())].push_back(&cell);
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto cellset = members[g];
        std::sort(cellset.begin(), cellset.end(),
                  [](const SweepCell* a, const SweepCell* b) { return a->result.config.horizon < b->result.config.horizon; });
        std::vector<double> T, R, se;
        for (const auto* c : cellset) {
            T.push_back(static_cast<double>(c->result.config.horizon));
            R.push_back(c->result.regret);
            se.push_back(c->result.regret_std_error);
        }
        ScalingFit f;
        f.group = groups[g];
        if (T.size() < kMinFitPoints) continue;
        try {
            f.power = fit_power_law(T, R, se);
        } catch (const Error& e) {
            f.errors.push_back(std::string("power_law: ") + e.what());
        }
        try {
            f.log = fit_log_law(T, R, se);
        } catch (const Error& e) {
            f.errors.push_back(std::string("log_law: ") + e.what());
        }
        fits.push_back(std::move(f));
    }
    return fits;
}

inline SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options = {}) {
    SweepResult out;
    out.spec = spec;
    for (auto& coords : enumerate_cells(spec)) {
        ExperimentConfig c = spec.base;
        std::string label;
        for (const auto& [name, v] : coords) {
            apply_axis(c, name, v);
            if (!label.empty()) label += "_";
            label += name + "=" + axis_value_label(v);
        }
        if (label.empty()) label = "base";
        out.cells.push_back(SweepCell{coords, label, run_experiment(c, options)});
    }
    out.fits = fit_horizon_groups(out.cells);
    return out;
}

// ---------------------------------------------------------------------------
// Parallel speedup and synchronization-period studies.
// ---------------------------------------------------------------------------

struct StudyRow {
    std::size_t value = 0;  // M or tau
    double regret = 0.0;
    double std_error = 0.0;
    double ratio = 1.0;  // regret / regret of the baseline row (M = 1 or tau = 1)
    double ratio_std_error = 0.0;
    double reference = 1.0;      // speedup: predicted 1/sqrt(M); tau: communication rounds
    bool regime_ok = true;       // speedup: sigma^2/M >= L K^2
};

struct SpeedupStudy {
    std::vector<StudyRow> rows;
    bool strictly_decreasing = true;  // consecutive drops exceed 2 combined standard errors
    std::vector<std::string> warnings;
    std::vector<ExperimentResult> runs;
};

struct TauStudy {
    std::vector<StudyRow> rows;
    std::size_t tau_star = 1;
    double ratio_at_tau_star = 1.0;
    bool non_decreasing = true;  // within 2 combined standard errors
    std::vector<ExperimentResult> runs;
};

inline std::size_t reference_tau(std::size_t T, std::size_t M) {
    const double v = std::pow(static_cast<double>(T), 0.25) / std::pow(static_cast<double>(M), 0.75);
    // Tolerate rounding in the powers so exact integers are not pushed up by one.
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(v * (1.0 - 1e-12))));
}

namespace detail {

inline void fill_ratios(std::vector<StudyRow>& rows) {
    const StudyRow base = rows.front();
    for (auto& r : rows) {
        r.ratio = r.regret / base.regret;
        const double rel = std::hypot(r.std_error / r.regret, base.std_error / base.regret);
        r.ratio_std_error = (&r == &rows.front()) ? 0.0 : std::abs(r.ratio) * rel;
    }
}

inline std::vector<std::size_t> with_baseline(std::vector<std::size_t> values) {
    if (std::find(values.begin(), values.end(), 1) == values.end()) values.push_back(1);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

}  // namespace detail

inline SpeedupStudy speedup_study(const ExperimentConfig& base, std::vector<std::size_t> clients,
                                  const RunOptions& options = {}) {
    SpeedupStudy out;
    for (std::size_t M : detail::with_baseline(std::move(clients))) {
        ExperimentConfig c = base;
        c.num_clients = M;
        out.runs.push_back(run_experiment(c, options));
        const auto& r = out.runs.back();
        StudyRow row;
        row.value = M;
        row.regret = r.regret;
        row.std_error = r.regret_std_error;
        row.reference = 1.0 / std::sqrt(static_cast<double>(M));
        row.regime_ok = r.profile.sigma_sq_bar / static_cast<double>(M) >= r.L * r.profile.K_sq_bar;
        if (!row.regime_ok)
            out.warnings.push_back("regime violation at M=" + std::to_string(M) +
                                   ": sigma^2/M < L K^2, variance reduction no longer dominates");
        out.rows.push_back(row);
    }
    detail::fill_ratios(out.rows);
    for (std::size_t i = 1; i < out.rows.size(); ++i) {
        const auto& a = out.rows[i - 1];
        const auto& b = out.rows[i];
        out.strictly_decreasing = out.strictly_decreasing && a.regret - b.regret > 2.0 * std::hypot(a.std_error, b.std_error);
    }
    return out;
}

inline TauStudy tau_study(const ExperimentConfig& base, std::vector<std::size_t> periods,
                          const RunOptions& options = {}) {
    TauStudy out;
    out.tau_star = reference_tau(base.horizon, base.num_clients);
    periods.push_back(out.tau_star);
    for (std::size_t tau : detail::with_baseline(std::move(periods))) {
        ExperimentConfig c = base;
        c.sync_period = tau;
        c.sync_phase = std::min(c.sync_phase, tau - 1);
        out.runs.push_back(run_experiment(c, options));
        const auto& r = out.runs.back();
        StudyRow row;
        row.value = tau;
        row.regret = r.regret;
        row.std_error = r.regret_std_error;
        row.reference = static_cast<double>(std::count(r.sync.begin(), r.sync.end(), 1));
        out.rows.push_back(row);
    }
    detail::fill_ratios(out.rows);
    for (std::size_t i = 1; i < out.rows.size(); ++i) {
        const auto& a = out.rows[i - 1];
        const auto& b = out.rows[i];
        out.non_decreasing = out.non_decreasing && b.regret >= a.regret - 2.0 * std::hypot(a.std_error, b.std_error);
        if (b.value == out.tau_star) out.ratio_at_tau_star = b.ratio;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lemma audits on a frozen run.
// ---------------------------------------------------------------------------

struct AuditReport {
    ExperimentResult run;
    std::vector<std::size_t> frozen_steps;
    std::vector<Lemma2Verdict> lemma2;
    bool pass = false;
};

// Distinct steps in [2, T] drawn from the state-selection stream, sorted.
inline std::vector<std::size_t> select_frozen_steps(const ExperimentConfig& config, std::size_t count) {
    if (config.horizon < 2) throw ConfigError("Lemma 2 audit needs a horizon of at least 2");
    count = std::min(count, config.horizon - 1);
    RngStream stream({config.seed, 0, 0, 0, DrawPurpose::state_selection});
    std::vector<std::size_t> steps;
    while (steps.size() < count) {
        const auto t = 2 + static_cast<std::size_t>(stream.uniform() * static_cast<double>(config.horizon - 1));
        if (t <= config.horizon && std::find(steps.begin(), steps.end(), t) == steps.end()) steps.push_back(t);
    }
    std::sort(steps.begin(), steps.end());
    return steps;
}

inline AuditReport run_audit(const ExperimentConfig& config, std::size_t num_states = 10, const RunOptions& options = {}) {
    const PreparedExperiment prep(config);
    AuditReport out;
    out.run = run_experiment(prep, options);
    out.frozen_steps = select_frozen_steps(config, num_states);
    EngineOptions eo;
    eo.capture_steps = out.frozen_steps;
    const Trace tr = run_replicate(config, prep.model, prep.schedule, prep.step_sizes, prep.oracle, 0, eo);
    out.lemma2.resize(tr.captured.size());
    parallel_for(tr.captured.size(), options.threads, [&](std::size_t i) {
        out.lemma2[i] = audit_lemma2(tr.captured[i], prep.model, prep.schedule, prep.oracle, prep.comparators,
                                     out.run.profile, config.mc_budget, config.seed);
    });
    out.run.bounds.lemma2 = out.lemma2;
    out.pass = std::all_of(out.lemma2.begin(), out.lemma2.end(), [](const auto& v) { return v.pass; }) &&
               out.run.bounds.lemma1->pass && (!out.run.bounds.lemma3 || out.run.bounds.lemma3->pass);
    return out;
}

}  // namespace fedsea
