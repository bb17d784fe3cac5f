#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedsea/fedsea.hpp"
#include "fedsea/testing/reference.hpp"

using namespace fedsea;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("fedsea_test_harness_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig small_iid(std::size_t T = 256, std::size_t R = 8) {
    ExperimentConfig c;
    c.num_clients = 4;
    c.horizon = T;
    c.sync_period = 4;
    c.dimension = 2;
    c.replicates = R;
    c.seed = 5;
    c.step_size.kind = StepSizeKind::theory_convex;
    c.loss.convex_only = true;
    c.adversary.means = {{0.3, 0.3}};
    c.adversary.variances = {1.0};
    return c;
}

ExperimentConfig small_heterogeneous(std::size_t T = 512, std::size_t R = 16) {
    ExperimentConfig c = small_iid(T, R);
    c.step_size.kind = StepSizeKind::constant;
    c.step_size.eta = 0.02;
    c.adversary.kind = AdversaryKind::static_heterogeneous;
    c.adversary.means = {{1.3, 0.3}, {-0.7, 0.3}, {0.3, 1.3}, {0.3, -0.7}};
    return c;
}

}  // namespace

TEST(ConfigIo, JsonRoundTripPreservesConfigAndHash) {
    ExperimentConfig c = small_heterogeneous();
    c.domain = Domain::ball(4.0);
    c.initial_point = Vector{0.1, -0.2};
    c.adversary.client_offsets = {{0.1, 0.0}};
    const json j = to_json(c);
    const ExperimentConfig back = config_from_json(json::parse(j.dump()));
    EXPECT_EQ(back, c);
    EXPECT_EQ(config_hash(back), config_hash(c));
    ExperimentConfig other = c;
    other.seed += 1;
    EXPECT_NE(config_hash(other), config_hash(c));
}

TEST(ConfigIo, StrictParsing) {
    json j = to_json(small_iid());
    j["unexpected"] = 1;
    EXPECT_THROW(config_from_json(j), ConfigError);
    json k = to_json(small_iid());
    k["horizon"] = -3;
    EXPECT_THROW(config_from_json(k), ConfigError);
    json u = to_json(small_iid());
    u["projection_radius"] = "unbounded";
    EXPECT_FALSE(config_from_json(u).domain.bounded());
    json s = to_json(small_iid());
    s["step_size_policy"] = "theory_convex";
    EXPECT_EQ(config_from_json(s).step_size.kind, StepSizeKind::theory_convex);
    json bad = to_json(small_iid());
    bad["sync_period"] = 1000;
    EXPECT_THROW(run_experiment(config_from_json(bad)), ConfigError);
}

TEST(ConfigIo, SampleConfigsLoad) {
    const std::filesystem::path dir = FEDSEA_SOURCE_DIR "/configs";
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const json j = load_json_file(e.path().string());
        if (j.contains("axes"))
            EXPECT_NO_THROW(sweep_from_json(j)) << e.path();
        else if (j.contains("values"))
            EXPECT_NO_THROW(config_from_json(j.at("base"))) << e.path();
        else
            EXPECT_NO_THROW(config_from_json(j)) << e.path();
        ++n;
    }
    EXPECT_GE(n, 5u);
}

TEST(Experiment, PointMassAtOptimumHasZeroRegret) {
    ExperimentConfig c = small_iid(64, 4);
    c.adversary.variances = {0.0};
    c.initial_point = Vector{0.3, 0.3};
    const auto r = run_experiment(c);
    for (double v : r.regret_cum) EXPECT_EQ(v, 0.0);
}

TEST(Experiment, CentralizedReferenceRegretIsPositiveAndConcave) {
    ExperimentConfig c = small_iid(400, 1);
    c.num_clients = 1;
    c.sync_period = 1;
    c.loss.convex_only = false;
    c.step_size.kind = StepSizeKind::decaying_strongly_convex;
    const PreparedExperiment prep(c);
    const auto r = run_experiment(prep);
    const auto ref = reference::centralized_sgd_mean_quadratic(c.start_point(), prep.schedule, prep.step_sizes, c.seed, 0);
    double cum = 0.0;
    for (std::size_t t = 0; t < 400; ++t) {
        cum += ref.expected_losses[t] - 0.5;
        EXPECT_NEAR(r.regret_cum[t], cum, 1e-9 * (1 + cum));
    }
    EXPECT_GT(r.regret, 0.0);
    // Concavity in expectation: the second half adds less than the first.
    EXPECT_LT(r.regret_cum[399] - r.regret_cum[199], r.regret_cum[199]);
}

TEST(Experiment, DeterministicAcrossThreadCounts) {
    const auto c = small_heterogeneous(256, 12);
    const auto a = run_experiment(c, {1});
    const auto b = run_experiment(c, {4});
    EXPECT_EQ(trace_csv(a), trace_csv(b));
    EXPECT_EQ(result_json(a).dump(), result_json(b).dump());
}

TEST(Experiment, FailedReplicateFailsTheRun) {
    ExperimentConfig c = small_iid(200, 4);
    c.step_size.kind = StepSizeKind::constant;
    c.step_size.eta = 3.0;
    c.step_size.unsafe = true;
    EXPECT_THROW(run_experiment(c), DivergenceError);
}

TEST(Experiment, UnboundedLinregWithTheoryStepNeedsARadius) {
    ExperimentConfig c = small_iid(64, 2);
    c.loss.family = LossFamily::gaussian_linreg;
    EXPECT_THROW(run_experiment(c), ConfigError);
    c.domain = Domain::ball(3.0);
    EXPECT_NO_THROW(run_experiment(c));
}

TEST(Experiment, LinregOnUnboundedDomainUsesVisitedBall) {
    ExperimentConfig c = small_iid(64, 2);
    c.loss.family = LossFamily::gaussian_linreg;
    c.step_size.kind = StepSizeKind::constant;
    c.step_size.eta = 0.02;
    const auto r = run_experiment(c);
    EXPECT_TRUE(r.profile.visited_ball);
    EXPECT_FALSE(r.notes.empty());
}

TEST(Experiment, LogisticRunsEndToEnd) {
    ExperimentConfig c = small_iid(64, 4);
    c.loss.family = LossFamily::empirical_logistic;
    c.loss.surrogate_samples = 300;
    c.domain = Domain::ball(3.0);
    c.adversary.kind = AdversaryKind::static_heterogeneous;
    c.adversary.means = {{1.0, 0.5}, {0.5, 1.0}};
    const auto r = run_experiment(c);
    EXPECT_EQ(r.comparator_method, ComparatorMethod::monte_carlo_solver);
    EXPECT_FALSE(r.profile.zeta_exact);
    EXPECT_TRUE(r.bounds.lemma1->pass);
    EXPECT_TRUE(std::isfinite(r.regret));
}

TEST(Output, TraceCsvRowsAndHeadline) {
    const auto r = run_experiment(small_heterogeneous(128, 4));
    const auto dir = scratch("run");
    emit_run(r, dir, true);
    std::istringstream csv(slurp(dir / "trace.csv"));
    std::string line, last;
    std::getline(csv, line);
    EXPECT_EQ(line, "t,regret_cum,V_t,zeta_sq,K_sq,sigma_sq,eta_t,sync_flag");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        last = line;
    }
    EXPECT_EQ(rows, 128u);
    const double final_csv = std::stod(last.substr(last.find(',') + 1));
    const json doc = load_json_file((dir / "result.json").string());
    const double headline = doc["regret"]["value"].get<double>();
    EXPECT_NEAR(final_csv, headline, 1e-9 * (1 + std::abs(headline)));
    // Re-parsing the echoed config reproduces the hash.
    EXPECT_EQ(hex64(config_hash(config_from_json(doc["config"]))), doc["config_hash"].get<std::string>());
    EXPECT_TRUE(std::filesystem::exists(dir / "regret.svg"));
}

TEST(Output, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Sweep, EnumerationOrderAndCap) {
    SweepSpec s;
    s.base = small_iid(64, 2);
    s.axes.push_back({"horizon", {64, 128}});
    s.axes.push_back({"num_clients", {1, 2, 4}});
    const auto cells = enumerate_cells(s);
    ASSERT_EQ(cells.size(), 6u);
    EXPECT_EQ(cells[0][1].second, 1);
    EXPECT_EQ(cells[1][1].second, 2);
    EXPECT_EQ(cells[3][0].second, 128);
    s.cell_cap = 5;
    EXPECT_THROW(enumerate_cells(s), ConfigError);
}

TEST(Sweep, JsonRoundTripAndAxisErrors) {
    SweepSpec s;
    s.base = small_iid(64, 2);
    s.axes.push_back({"sync_period", {1, 2}});
    const auto back = sweep_from_json(to_json(s));
    EXPECT_EQ(back.base, s.base);
    ASSERT_EQ(back.axes.size(), 1u);
    EXPECT_EQ(back.axes[0].values.size(), 2u);
    json bad = to_json(s);
    bad["axes"][0]["name"] = "colour";
    EXPECT_THROW(run_sweep(sweep_from_json(bad)), ConfigError);
}

TEST(Sweep, FitsAndEmittedFiles) {
    SweepSpec s;
    s.base = small_iid(64, 4);
    s.axes.push_back({"horizon", {64, 128, 256, 512}});
    const auto r = run_sweep(s);
    ASSERT_EQ(r.fits.size(), 1u);
    ASSERT_TRUE(r.fits[0].power.has_value());
    EXPECT_GT(r.fits[0].power->b, 0.0);
    const auto dir = scratch("sweep");
    emit_sweep(r, dir, true);
    EXPECT_TRUE(std::filesystem::exists(dir / "result.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "scaling.svg"));
    EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir / "cells"), std::filesystem::directory_iterator{}), 4);
}

TEST(Studies, SpeedupBaselineAndNoiselessCase) {
    ExperimentConfig c = small_iid(512, 8);
    c.adversary.variances = {0.0};
    const auto s = speedup_study(c, {4});
    ASSERT_EQ(s.rows.size(), 2u);
    EXPECT_EQ(s.rows[0].value, 1u);
    EXPECT_EQ(s.rows[0].ratio, 1.0);
    // Nothing to average away: every client follows the same deterministic path.
    EXPECT_NEAR(s.rows[1].ratio, 1.0, 0.05);
}

TEST(Studies, SpeedupFlagsRegimeViolation) {
    ExperimentConfig c = small_iid(256, 4);
    c.adversary.kind = AdversaryKind::cyclic_means;
    c.adversary.base = {0.3, 0.3};
    c.adversary.amplitude = {2.0, 0.0};
    c.adversary.period = 2;
    const auto s = speedup_study(c, {4});
    EXPECT_FALSE(s.warnings.empty());
}

TEST(Studies, TauBaselineAndReference) {
    EXPECT_EQ(reference_tau(16384, 4), 4u);
    EXPECT_EQ(reference_tau(16, 1), 2u);
    ExperimentConfig c = small_iid(256, 4);
    c.adversary.variances = {0.0};
    c.step_size.kind = StepSizeKind::constant;
    c.step_size.eta = 0.01;
    const auto s = tau_study(c, {2, 8});
    EXPECT_EQ(s.rows.front().value, 1u);
    // Identical point masses: no drift source, so tau does not matter.
    for (const auto& row : s.rows) EXPECT_NEAR(row.regret, s.rows.front().regret, 1e-9 * s.rows.front().regret);
}

TEST(Studies, AuditProducesLemmaVerdicts) {
    ExperimentConfig c = small_heterogeneous(256, 32);
    c.sync_period = 8;
    c.step_size.eta = 0.01;
    c.mc_budget = 20000;
    const auto a = run_audit(c, 4);
    EXPECT_EQ(a.frozen_steps.size(), 4u);
    EXPECT_EQ(a.lemma2.size(), 4u);
    EXPECT_TRUE(a.pass);
}

TEST(Parallel, LowestIndexExceptionWins) {
    for (std::size_t threads : {1, 3}) {
        try {
            parallel_for(10, threads, [](std::size_t i) {
                if (i == 7 || i == 3) throw Error("fail " + std::to_string(i));
            });
            FAIL();
        } catch (const Error& e) {
            EXPECT_STREQ(e.what(), "fail 3");
        }
    }
}
