#pragma once

// Acceptance suite: each criterion builds its own configuration, runs it through the public API
// and reports a single pass/fail verdict with the measured numbers.

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fedsea/experiment.hpp"
#include "fedsea/output.hpp"
#include "fedsea/testing/reference.hpp"

namespace fedsea::selftest {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct SuiteOptions {
    std::size_t replicates = 64;
    std::size_t threads = 0;
    std::filesystem::path scratch = std::filesystem::temp_directory_path() / "fedsea_selftest";
    std::uint64_t seed = 20240601;
};

// ---------------------------------------------------------------------------
// Configurations.
// ---------------------------------------------------------------------------

inline const Vector kCenter{0.3, 0.3};

inline ExperimentConfig iid_quadratic(const SuiteOptions& o) {
    ExperimentConfig c;
    c.num_clients = 4;
    c.horizon = 1024;
    c.sync_period = 4;
    c.dimension = 2;
    c.step_size.kind = StepSizeKind::theory_convex;
    c.replicates = o.replicates;
    c.seed = o.seed;
    c.loss.family = LossFamily::mean_quadratic;
    c.adversary.kind = AdversaryKind::static_iid;
    c.adversary.means = {kCenter};
    c.adversary.variances = {1.0};
    return c;
}

// Convex regime: strong convexity is not reported, so the constant theory step size is used.
inline SweepSpec convex_sweep(const SuiteOptions& o) {
    SweepSpec s;
    s.base = iid_quadratic(o);
    s.base.loss.convex_only = true;
    s.axes.push_back({"horizon", {1024, 2048, 4096, 8192, 16384, 32768}});
    return s;
}

inline SweepSpec strongly_convex_sweep(const SuiteOptions& o) {
    SweepSpec s;
    s.base = iid_quadratic(o);
    s.base.step_size.kind = StepSizeKind::decaying_strongly_convex;
    s.axes.push_back({"horizon", {1024, 2048, 4096, 8192, 16384, 32768}});
    return s;
}

inline ExperimentConfig speedup_base(const SuiteOptions& o) {
    ExperimentConfig c = iid_quadratic(o);
    c.loss.convex_only = true;
    c.horizon = 16384;
    return c;
}

// Alternating means c +- a with ||a||^2 = 1.25, so K^2 = ||a||^2 / 2 = 0.625 = 10 sigma^2 / 16.
inline ExperimentConfig cyclic_base(const SuiteOptions& o) {
    ExperimentConfig c = speedup_base(o);
    c.adversary = AdversarySpec{};
    c.adversary.kind = AdversaryKind::cyclic_means;
    c.adversary.base = kCenter;
    c.adversary.amplitude = {1.0, 0.5};
    c.adversary.period = 2;
    c.adversary.variances = {1.0};
    return c;
}

// Four clients with means c +- e_1, c +- e_2: zeta^2 = 1 at every step.
inline ExperimentConfig heterogeneous_base(const SuiteOptions& o) {
    ExperimentConfig c = speedup_base(o);
    c.adversary = AdversarySpec{};
    c.adversary.kind = AdversaryKind::static_heterogeneous;
    c.adversary.means = {{1.3, 0.3}, {-0.7, 0.3}, {0.3, 1.3}, {0.3, -0.7}};
    c.adversary.variances = {1.0};
    return c;
}

inline ExperimentConfig lemma_audit_config(const SuiteOptions& o) {
    ExperimentConfig c = heterogeneous_base(o);
    c.horizon = 4096;
    c.sync_period = 8;
    c.step_size = StepSizePolicy{StepSizeKind::constant, 0.01, {}, false};
    c.mc_budget = 100000;
    return c;
}

// ---------------------------------------------------------------------------
// Suite.
// ---------------------------------------------------------------------------

class Suite {
public:
    explicit Suite(SuiteOptions options) : o_(std::move(options)) {}

    std::vector<CriterionResult> run_all(const std::function<void(const CriterionResult&)>& on_result = {}) {
        std::vector<CriterionResult> out;
        const std::vector<std::pair<const char*, CriterionResult (Suite::*)()>> criteria = {
            {"reduction fidelity", &Suite::c1},        {"convex sqrt(T) scaling", &Suite::c2},
            {"strongly convex log T scaling", &Suite::c3}, {"parallel speedup", &Suite::c4},
            {"speedup breakdown", &Suite::c5},         {"communication savings", &Suite::c6},
            {"Lemma 1 audit", &Suite::c7},             {"Lemma 2 audit", &Suite::c8},
            {"Lemma 3 audit", &Suite::c9},             {"oracle cross-validation", &Suite::c10},
            {"determinism", &Suite::c11},
        };
        for (std::size_t i = 0; i < criteria.size(); ++i) {
            const auto start = std::chrono::steady_clock::now();
            CriterionResult r;
            try {
                r = (this->*criteria[i].second)();
            } catch (const std::exception& e) {
                r.pass = false;
                r.detail = std::string("error: ") + e.what();
            }
            r.id = static_cast<int>(i + 1);
            r.name = criteria[i].first;
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (on_result) on_result(r);
            out.push_back(r);
        }
        return out;
    }

    // Individual criteria, public so tests can call them one at a time.
    CriterionResult c1() {
        ExperimentConfig c = iid_quadratic(o_);
        c.num_clients = 1;
        c.sync_period = 1;
        c.horizon = 1000;
        c.replicates = 1;
        c.step_size = StepSizePolicy{StepSizeKind::constant, 0.05, {}, false};
        const auto start = std::chrono::steady_clock::now();
        const PreparedExperiment prep(c);
        EngineOptions eo;
        eo.record_iterates = true;
        const Trace tr = run_replicate(c, prep.model, prep.schedule, prep.step_sizes, prep.oracle, 0, eo);
        const auto ref = reference::centralized_sgd_mean_quadratic(c.start_point(), prep.schedule, prep.step_sizes, c.seed, 0);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::size_t mismatches = 0;
        for (std::size_t t = 0; t < c.horizon; ++t) {
            if (std::memcmp(tr.virtual_iterates.data() + t * c.dimension, ref.iterates[t].data(), c.dimension * sizeof(double)) != 0)
                ++mismatches;
            if (std::memcmp(&tr.expected_loss[t], &ref.expected_losses[t], sizeof(double)) != 0) ++mismatches;
        }
        CriterionResult r;
        r.pass = mismatches == 0 && secs < 1.0;
        r.detail = "T=1000, mismatched values=" + std::to_string(mismatches) + ", runtime=" + fmt(secs) + "s";
        return r;
    }

    CriterionResult c2() {
        const SweepResult& s = convex();
        CriterionResult r;
        if (s.fits.empty() || !s.fits.front().power) return fail("no power-law fit");
        const auto& f = *s.fits.front().power;
        r.pass = f.b >= 0.40 && f.b <= 0.60 && f.r_squared >= 0.95;
        r.detail = "exponent b=" + fmt(f.b) + " (+-" + fmt(f.b_std_error) + "), R^2=" + fmt(f.r_squared) +
                   ", replicates=" + std::to_string(o_.replicates);
        return r;
    }

    CriterionResult c3() {
        const SweepResult& s = strongly_convex();
        CriterionResult r;
        if (s.fits.empty() || !s.fits.front().power || !s.fits.front().log) return fail("missing fits");
        const auto& p = *s.fits.front().power;
        const auto& l = *s.fits.front().log;
        r.pass = l.r_squared >= 0.95 && p.b <= 0.20;
        r.detail = "log-law a=" + fmt(l.a) + " c=" + fmt(l.c) + " R^2=" + fmt(l.r_squared) + "; power exponent b=" + fmt(p.b);
        return r;
    }

    CriterionResult c4() {
        const SpeedupStudy& s = speedup();
        const double ratio = s.rows.back().ratio;
        CriterionResult r;
        r.pass = ratio >= 0.125 && ratio <= 0.5 && s.strictly_decreasing;
        r.detail = "regret(16)/regret(1)=" + fmt(ratio) + " (predicted 0.25), " + regrets(s.rows) +
                   (s.strictly_decreasing ? ", strictly decreasing" : ", NOT strictly decreasing");
        return r;
    }

    CriterionResult c5() {
        const SpeedupStudy& s = breakdown();
        const double ratio = s.rows.back().ratio;
        const auto& prof = s.runs.back().profile;
        CriterionResult r;
        r.pass = ratio >= 0.6;
        r.detail = "regret(16)/regret(1)=" + fmt(ratio) + ", L*K^2=" + fmt(prof.K_sq_bar) + " vs sigma^2/16=" +
                   fmt(prof.sigma_sq_bar / 16.0) + ", " + regrets(s.rows);
        return r;
    }

    CriterionResult c6() {
        const TauStudy& s = taus();
        const StudyRow& base = s.rows.front();
        const StudyRow& last = s.rows.back();
        CriterionResult r;
        const bool near = s.ratio_at_tau_star <= 1.3;
        const bool worse = last.value == 64 && last.regret - base.regret > 2.0 * std::hypot(last.std_error, base.std_error);
        r.pass = near && worse;
        r.detail = "tau*=" + std::to_string(s.tau_star) + ", regret(tau*)/regret(1)=" + fmt(s.ratio_at_tau_star) +
                   ", regret(64)=" + fmt(last.regret) + " vs regret(1)=" + fmt(base.regret) + " +- " +
                   fmt(std::hypot(last.std_error, base.std_error));
        return r;
    }

    CriterionResult c7() {
        std::size_t runs = 0, steps = 0, failures = 0;
        double gap = 0.0;
        for_each_scaling_run([&](const ExperimentResult& e) {
            const auto& v = *e.bounds.lemma1;
            ++runs;
            steps += v.steps;
            failures += v.failures;
            if (e.config.loss.family == LossFamily::mean_quadratic) gap = std::max(gap, v.max_abs_gap);
        });
        CriterionResult r;
        r.pass = failures == 0 && gap <= 1e-9 && runs > 0;
        r.detail = std::to_string(runs) + " runs, " + std::to_string(steps) + " replicate-steps, failures=" +
                   std::to_string(failures) + ", max |LHS-RHS|/(1+|RHS|)=" + fmt(gap);
        return r;
    }

    CriterionResult c8() {
        const AuditReport& a = audit();
        std::size_t passed = 0;
        double worst = -INFINITY;
        for (const auto& v : a.lemma2) {
            passed += v.pass ? 1 : 0;
            worst = std::max(worst, (v.estimate - v.rhs) / std::max(v.std_error, 1e-300));
        }
        CriterionResult r;
        r.pass = a.lemma2.size() == 10 && passed == 10;
        r.detail = std::to_string(passed) + "/" + std::to_string(a.lemma2.size()) +
                   " frozen states pass, worst (estimate-RHS)/SE=" + fmt(worst);
        return r;
    }

    CriterionResult c9() {
        const AuditReport& a = audit();
        if (!a.run.bounds.lemma3) return fail("Lemma 3 audit not applicable to the configuration");
        const auto& v = *a.run.bounds.lemma3;
        CriterionResult r;
        r.pass = v.pass;
        r.detail = "sum E[V_t]=" + fmt(v.lhs) + " +- " + fmt(v.lhs_std_error) + " vs RHS=" + fmt(v.rhs) + " (" +
                   std::to_string(v.replicates) + " replicates)";
        return r;
    }

    CriterionResult c10() {
        RngStream rng({o_.seed, 0, 0, 0, DrawPurpose::self_test});
        std::size_t checks = 0, misses = 0;
        double worst = 0.0, split_error = 0.0;
        std::string first_miss;
        auto check = [&](const char* what, double closed, const reference::Estimate& e) {
            ++checks;
            // deviation as a fraction of the allowed 5 SE (plus a rounding floor)
            const double tol = 5.0 * e.std_error + 1e-9 * (1.0 + std::abs(closed));
            const bool ok = std::abs(e.value - closed) <= tol;
            worst = std::max(worst, std::abs(e.value - closed) / tol);
            if (!ok) {
                ++misses;
                if (first_miss.empty()) first_miss = std::string(what) + " closed=" + fmt(closed) + " est=" + fmt(e.value);
            }
        };
        for (int s = 0; s < 20; ++s) {
            ExperimentConfig c = random_schedule(rng, s);
            const PreparedExperiment prep(c);
            const auto& prof = *prep.profile;
            const double R = *c.domain.radius;
            for (int k = 0; k < 3; ++k) {
                const std::size_t t = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(c.horizon));
                const std::uint64_t key = o_.seed + 1000 * static_cast<std::uint64_t>(s) + static_cast<std::uint64_t>(k);
                for (int p = 0; p < 3; ++p) {
                    const Vector x = reference::boundary_point(rng, c.dimension, R);
                    check("zeta", prof.zeta_sq[t - 1], reference::gradient_gap(prep.schedule, t, x, 40, 200, key + 17 * p));
                    check("sigma", prof.sigma_sq[t - 1], reference::gradient_variance(prep.schedule, t, x, 4000, key + 31 * p));
                }
                check("K", prof.K_sq[t - 1],
                      reference::loss_difference(prep.schedule, t, prep.comparators.best_in_hindsight,
                                                 prep.comparators.per_step_optima[t - 1], 20000, key));
            }
            const ExperimentResult run = run_experiment(prep, {o_.threads});
            split_error = std::max(split_error, run.bounds.max_split_error);
        }
        for_each_scaling_run([&](const ExperimentResult& e) { split_error = std::max(split_error, e.bounds.max_split_error); });
        split_error = std::max(split_error, audit().run.bounds.max_split_error);
        CriterionResult r;
        r.pass = misses == 0 && split_error <= 1e-9;
        r.detail = std::to_string(checks) + " estimator checks on 20 schedules, misses=" + std::to_string(misses) +
                   ", worst deviation/tolerance=" + fmt(worst) + ", max split identity error=" + fmt(split_error) +
                   (first_miss.empty() ? "" : "; first miss: " + first_miss);
        return r;
    }

    CriterionResult c11() {
        const std::size_t first = resolve_threads(o_.threads);
        const std::size_t second = first == 1 ? 3 : 1;
        const auto dir_a = o_.scratch / "determinism_a";
        const auto dir_b = o_.scratch / "determinism_b";
        std::filesystem::remove_all(dir_a);
        std::filesystem::remove_all(dir_b);
        emit_sweep(convex(), dir_a, true);
        emit_sweep(run_sweep(convex_sweep(o_), {second}), dir_b, true);
        std::size_t files = 0, differing = 0;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(dir_a)) {
            if (!entry.is_regular_file()) continue;
            ++files;
            const auto rel = std::filesystem::relative(entry.path(), dir_a);
            if (read(entry.path()) != read(dir_b / rel)) ++differing;
        }
        std::size_t files_b = 0;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(dir_b))
            files_b += entry.is_regular_file() ? 1 : 0;
        CriterionResult r;
        r.pass = files > 0 && differing == 0 && files == files_b;
        r.detail = "threads " + std::to_string(first) + " vs " + std::to_string(second) + ": " + std::to_string(files) +
                   " files, differing=" + std::to_string(differing);
        return r;
    }

    // Shared runs, computed on first use.
    const SweepResult& convex() { return cached(convex_, [&] { return run_sweep(convex_sweep(o_), {o_.threads}); }); }
    const SweepResult& strongly_convex() {
        return cached(strong_, [&] { return run_sweep(strongly_convex_sweep(o_), {o_.threads}); });
    }
    const SpeedupStudy& speedup() { return cached(speedup_, [&] { return speedup_study(speedup_base(o_), {1, 4, 16}, {o_.threads}); }); }
    const SpeedupStudy& breakdown() { return cached(breakdown_, [&] { return speedup_study(cyclic_base(o_), {1, 4, 16}, {o_.threads}); }); }
    const TauStudy& taus() {
        return cached(taus_, [&] { return tau_study(heterogeneous_base(o_), {1, 2, 4, 8, 16, 32, 64}, {o_.threads}); });
    }
    const AuditReport& audit() { return cached(audit_, [&] { return run_audit(lemma_audit_config(o_), 10, {o_.threads}); }); }

private:
    template <class T, class F>
    const T& cached(std::optional<T>& slot, F&& make) {
        if (!slot) slot = make();
        return *slot;
    }

    template <class F>
    void for_each_scaling_run(F&& f) {
        for (const auto& cell : convex().cells) f(cell.result);
        for (const auto& cell : strongly_convex().cells) f(cell.result);
        for (const auto& run : speedup().runs) f(run);
        for (const auto& run : breakdown().runs) f(run);
        for (const auto& run : taus().runs) f(run);
    }

    // Random mean-quadratic schedule inside a ball of radius 3.
    static ExperimentConfig random_schedule(RngStream& rng, int index) {
        auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
        auto vec_in = [&](std::size_t d, double scale) {
            Vector v(d);
            for (double& x : v) x = uni(-scale, scale);
            return v;
        };
        ExperimentConfig c;
        c.dimension = 1 + static_cast<std::size_t>(uni(0, 4));
        c.num_clients = 2 + static_cast<std::size_t>(uni(0, 4));
        c.horizon = 40;
        c.sync_period = 1 + static_cast<std::size_t>(uni(0, 5));
        c.replicates = 4;
        c.seed = 1000 + static_cast<std::uint64_t>(index);
        c.domain = Domain::ball(3.0);
        c.step_size = StepSizePolicy{StepSizeKind::constant, 0.02, {}, false};
        c.loss.family = LossFamily::mean_quadratic;
        auto& a = c.adversary;
        const std::size_t d = c.dimension;
        a.variances.clear();
        for (std::size_t m = 0; m < c.num_clients; ++m) a.variances.push_back(index % 5 == 4 ? 0.0 : uni(0.2, 2.0));
        switch (index % 5) {
            case 0:
                a.kind = AdversaryKind::static_heterogeneous;
                for (std::size_t m = 0; m < c.num_clients; ++m) a.means.push_back(vec_in(d, 1.0));
                break;
            case 1:
                a.kind = AdversaryKind::cyclic_means;
                a.base = vec_in(d, 0.5);
                a.amplitude = vec_in(d, 0.8);
                a.period = 2 + static_cast<std::size_t>(uni(0, 4));
                for (std::size_t m = 0; m < c.num_clients; ++m) a.client_offsets.push_back(vec_in(d, 0.5));
                break;
            case 2:
                a.kind = AdversaryKind::drifting_means;
                a.base = vec_in(d, 0.5);
                a.velocity = vec_in(d, 0.02);
                for (std::size_t m = 0; m < c.num_clients; ++m) a.client_offsets.push_back(vec_in(d, 0.3));
                break;
            case 3:
                a.kind = AdversaryKind::piecewise_shift;
                a.shift_times = {10, 25};
                for (int k = 0; k < 3; ++k) a.segments.push_back(vec_in(d, 1.0));
                for (std::size_t m = 0; m < c.num_clients; ++m) a.client_offsets.push_back(vec_in(d, 0.4));
                break;
            default:
                a.kind = AdversaryKind::dirac_adversarial;
                for (int k = 0; k < 5; ++k) a.points.push_back(vec_in(d, 1.0));
                for (std::size_t m = 0; m < c.num_clients; ++m) a.client_offsets.push_back(vec_in(d, 0.4));
                break;
        }
        return c;
    }

    static std::string read(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    static std::string fmt(double v) {
        std::ostringstream os;
        os.precision(4);
        os << v;
        return os.str();
    }

    static std::string regrets(const std::vector<StudyRow>& rows) {
        std::string s = "regret by M:";
        for (const auto& r : rows) s += " " + std::to_string(r.value) + ":" + fmt(r.regret) + "+-" + fmt(r.std_error);
        return s;
    }

    static CriterionResult fail(const std::string& why) { return CriterionResult{0, "", false, why, 0.0}; }

    SuiteOptions o_;
    std::optional<SweepResult> convex_, strong_;
    std::optional<SpeedupStudy> speedup_, breakdown_;
    std::optional<TauStudy> taus_;
    std::optional<AuditReport> audit_;
};

inline std::string format_line(const CriterionResult& r) {
    std::ostringstream os;
    os << "[" << (r.pass ? "PASS" : "FAIL") << "] criterion " << r.id << " (" << r.name << "): " << r.detail << " ["
       << static_cast<long long>(r.seconds * 1000.0) << " ms]";
    return os.str();
}

}  // namespace fedsea::selftest
