#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fedsea/engine.hpp"
#include "fedsea/oracles.hpp"

using namespace fedsea;

namespace {

struct ZeroOracle {
    double global_loss(std::size_t, std::span<const double>) const { return 0.0; }
};

AdversarySpec heterogeneous_points(std::vector<Vector> means) {
    AdversarySpec s;
    s.kind = AdversaryKind::static_heterogeneous;
    s.means = std::move(means);
    s.variances = {0.0};
    return s;
}

ExperimentConfig base_config(std::size_t M, std::size_t T, std::size_t tau, std::size_t d) {
    ExperimentConfig c;
    c.num_clients = M;
    c.horizon = T;
    c.sync_period = tau;
    c.dimension = d;
    return c;
}

}  // namespace

TEST(Engine, SingleSgdStep) {
    auto c = base_config(1, 2, 1, 1);
    c.initial_point = Vector{1.0};
    c.adversary.means = {{0.0}};
    c.adversary.variances = {0.0};
    const LossModel q(LossFamily::mean_quadratic, 1);
    const AdversarySchedule s(c.adversary, 1, 2, 1);
    std::vector<double> etas{0.1, 0.1};
    EngineOptions opt;
    opt.record_iterates = true;
    const Trace tr = run_replicate(c, q, s, etas, ZeroOracle{}, 0, opt);
    EXPECT_EQ(tr.virtual_iterates[0], 1.0);
    EXPECT_DOUBLE_EQ(tr.virtual_iterates[1], 0.9);
}

TEST(Engine, TwoClientPeriodicAveragingMatchesHandLoop) {
    const std::size_t T = 9;
    auto c = base_config(2, T, 2, 1);
    c.adversary = heterogeneous_points({{1.0}, {-1.0}});
    const LossModel q(LossFamily::mean_quadratic, 1);
    const AdversarySchedule s(c.adversary, 2, T, 1);
    std::vector<double> etas(T, 0.1);
    const ExpectedLossOracle oracle(q, s, 0);
    const Trace tr = run_replicate(c, q, s, etas, oracle, 0);

    double a = 0.0, b = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
        const double avg = 0.5 * (a + b);
        const double V = 0.5 * ((a - avg) * (a - avg) + (b - avg) * (b - avg));
        EXPECT_NEAR(tr.consensus[t - 1], V, 1e-15) << "t=" << t;
        EXPECT_NEAR(tr.expected_loss[2 * (t - 1)], 0.5 * a * a + 0.5, 1e-15);
        EXPECT_NEAR(tr.virtual_loss[t - 1], 0.5 * avg * avg + 0.5, 1e-15);
        a -= 0.1 * (a - 1.0);
        b -= 0.1 * (b + 1.0);
        const bool sync = (t - 1) % 2 == 0;
        EXPECT_EQ(tr.sync[t - 1] != 0, sync);
        if (sync) a = b = 0.5 * (a + b);
    }
    // Averaging after t = 1, 3, ...: V_t vanishes at even t and is positive at odd t > 1.
    EXPECT_EQ(tr.consensus[1], 0.0);
    EXPECT_GT(tr.consensus[2], 0.0);
}

TEST(Engine, SyncPhaseShiftsAveragingSteps) {
    auto c = base_config(2, 6, 3, 1);
    c.sync_phase = 2;
    EXPECT_FALSE(c.is_sync_step(1));
    EXPECT_TRUE(c.is_sync_step(3));
    EXPECT_TRUE(c.is_sync_step(6));
}

TEST(Engine, ConsensusErrorExamples) {
    SimState st(2, 2, Vector{0.0, 0.0});
    EXPECT_EQ(consensus_error(st), 0.0);
    st.client(0)[0] = 1.0;
    st.client(1)[0] = -1.0;
    st.refresh_average();
    EXPECT_DOUBLE_EQ(consensus_error(st), 1.0);
    SimState single(1, 2, Vector{3.0, 1.0});
    EXPECT_EQ(consensus_error(single), 0.0);
}

TEST(Engine, ProjectionExamples) {
    EXPECT_EQ(project(Vector{0.3, 0.4}, Domain::ball(1.0)), (Vector{0.3, 0.4}));
    const Vector p = project(Vector{3.0, 4.0}, Domain::ball(1.0));
    EXPECT_DOUBLE_EQ(p[0], 0.6);
    EXPECT_DOUBLE_EQ(p[1], 0.8);
    EXPECT_EQ(project(Vector{30.0, 40.0}, Domain::unbounded()), (Vector{30.0, 40.0}));
}

TEST(Engine, ProjectedIteratesStayInBall) {
    auto c = base_config(3, 50, 2, 2);
    c.domain = Domain::ball(0.5);
    c.adversary.means = {{2.0, 2.0}};
    c.adversary.variances = {1.0};
    const LossModel q(LossFamily::mean_quadratic, 2);
    const AdversarySchedule s(c.adversary, 3, 50, 2);
    std::vector<double> etas(50, 0.2);
    EngineOptions opt;
    opt.record_iterates = true;
    const Trace tr = run_replicate(c, q, s, etas, ZeroOracle{}, 0, opt);
    EXPECT_LE(tr.max_iterate_norm, 0.5 * (1 + 1e-12));
    EXPECT_GT(tr.projected_steps(), 0u);
}

TEST(Engine, DivergenceIsReportedWithDiagnostics) {
    auto c = base_config(1, 200, 1, 1);
    c.adversary.means = {{1.0}};
    c.adversary.variances = {0.0};
    const LossModel q(LossFamily::mean_quadratic, 1);
    const AdversarySchedule s(c.adversary, 1, 200, 1);
    std::vector<double> etas(200, 3.0);
    try {
        run_replicate(c, q, s, etas, ZeroOracle{}, 0);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("t="), std::string::npos);
        EXPECT_NE(msg.find("eta_t="), std::string::npos);
        EXPECT_NE(msg.find("||x_t||="), std::string::npos);
        EXPECT_EQ(e.category(), ErrorCategory::divergence);
    }
}

TEST(Engine, ReplicatesAreDeterministicAndDistinct) {
    auto c = base_config(4, 64, 4, 3);
    c.seed = 99;
    c.adversary.means = {{0.1, 0.2, 0.3}};
    const LossModel q(LossFamily::mean_quadratic, 3);
    const AdversarySchedule s(c.adversary, 4, 64, 3);
    const ExpectedLossOracle oracle(q, s, 0);
    std::vector<double> etas(64, 0.05);
    const Trace a = run_replicate(c, q, s, etas, oracle, 3);
    const Trace b = run_replicate(c, q, s, etas, oracle, 3);
    const Trace other = run_replicate(c, q, s, etas, oracle, 4);
    EXPECT_EQ(a.expected_loss, b.expected_loss);
    EXPECT_EQ(a.realized_loss, b.realized_loss);
    EXPECT_NE(a.expected_loss, other.expected_loss);
}

TEST(Engine, CapturedStatesPrecedeTheUpdate) {
    auto c = base_config(2, 10, 5, 1);
    c.adversary = heterogeneous_points({{1.0}, {-1.0}});
    const LossModel q(LossFamily::mean_quadratic, 1);
    const AdversarySchedule s(c.adversary, 2, 10, 1);
    std::vector<double> etas(10, 0.1);
    EngineOptions opt;
    opt.capture_steps = {4, 1};
    const Trace tr = run_replicate(c, q, s, etas, ZeroOracle{}, 0, opt);
    ASSERT_EQ(tr.captured.size(), 2u);
    EXPECT_EQ(tr.captured[0].t, 1u);
    EXPECT_EQ(tr.captured[1].t, 4u);
    EXPECT_NEAR(consensus_error(tr.captured[1]), tr.consensus[3], 1e-15);
}

TEST(Engine, RejectsWrongStepSequence) {
    auto c = base_config(1, 5, 1, 1);
    c.adversary.means = {{0.0}};
    const LossModel q(LossFamily::mean_quadratic, 1);
    const AdversarySchedule s(c.adversary, 1, 5, 1);
    std::vector<double> etas(4, 0.1);
    EXPECT_THROW(run_replicate(c, q, s, etas, ZeroOracle{}, 0), Error);
}
