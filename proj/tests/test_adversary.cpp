#include <gtest/gtest.h>

#include "fedsea/adversary.hpp"

using namespace fedsea;

TEST(Adversary, StaticIidIsTheSameEverywhere) {
    AdversarySpec s;
    s.means = {{0.0, 0.0}};
    s.variances = {1.0};
    AdversarySchedule a(s, 3, 10, 2);
    const auto ref = a.dist_params(1, 1);
    for (std::size_t t = 1; t <= 10; ++t)
        for (std::size_t m = 1; m <= 3; ++m) EXPECT_EQ(a.dist_params(t, m), ref);
    const auto mom = *a.analytic_moments(4, 2);
    EXPECT_EQ(mom.mean, (Vector{0.0, 0.0}));
    EXPECT_EQ(mom.variance, 1.0);
    EXPECT_TRUE(a.client_independent());
}

TEST(Adversary, CyclicAlternatesSign) {
    AdversarySpec s;
    s.kind = AdversaryKind::cyclic_means;
    s.base = {0.0};
    s.amplitude = {0.7};
    s.period = 2;
    AdversarySchedule a(s, 2, 6, 1);
    for (std::size_t t = 1; t <= 6; ++t) {
        const double expected = (t % 2 == 1) ? 0.7 : -0.7;
        EXPECT_NEAR(a.dist_params(t, 1).mean[0], expected, 1e-15);
        EXPECT_EQ(a.dist_params(t, 2).mean, a.dist_params(t, 1).mean);
    }
}

TEST(Adversary, HeterogeneousDependsOnClientOnly) {
    AdversarySpec s;
    s.kind = AdversaryKind::static_heterogeneous;
    s.means = {{1.0, 0.0}, {-1.0, 0.0}};
    AdversarySchedule a(s, 2, 5, 2);
    for (std::size_t t = 1; t <= 5; ++t) {
        EXPECT_EQ(a.dist_params(t, 1).mean, (Vector{1.0, 0.0}));
        EXPECT_EQ(a.dist_params(t, 2).mean, (Vector{-1.0, 0.0}));
    }
    EXPECT_FALSE(a.client_independent());
}

TEST(Adversary, DriftingMeansMoveLinearly) {
    AdversarySpec s;
    s.kind = AdversaryKind::drifting_means;
    s.base = {1.0, 2.0};
    s.velocity = {0.5, -0.25};
    AdversarySchedule a(s, 1, 10, 2);
    EXPECT_EQ(a.analytic_moments(4, 1)->mean, (Vector{3.0, 1.0}));
}

TEST(Adversary, DiracIsPointMass) {
    AdversarySpec s;
    s.kind = AdversaryKind::dirac_adversarial;
    s.points = {{1.0}, {2.0}, {3.0}};
    AdversarySchedule a(s, 2, 7, 1);
    const auto mom = *a.analytic_moments(5, 2);
    EXPECT_EQ(mom.mean, (Vector{2.0}));
    EXPECT_EQ(mom.variance, 0.0);
    EXPECT_EQ(a.dist_params(5, 1).family, DistFamily::point_mass);
}

TEST(Adversary, PiecewiseShiftSwitchesAtShiftTimes) {
    AdversarySpec s;
    s.kind = AdversaryKind::piecewise_shift;
    s.shift_times = {4, 8};
    s.segments = {{0.0}, {1.0}, {2.0}};
    AdversarySchedule a(s, 1, 10, 1);
    EXPECT_EQ(a.dist_params(3, 1).mean[0], 0.0);
    EXPECT_EQ(a.dist_params(4, 1).mean[0], 1.0);
    EXPECT_EQ(a.dist_params(7, 1).mean[0], 1.0);
    EXPECT_EQ(a.dist_params(8, 1).mean[0], 2.0);
}

TEST(Adversary, ClientOffsetsAndVariancesCycle) {
    AdversarySpec s;
    s.means = {{0.0}};
    s.client_offsets = {{1.0}, {-1.0}};
    s.variances = {0.0, 2.0};
    AdversarySchedule a(s, 4, 3, 1);
    EXPECT_EQ(a.dist_params(1, 3).mean[0], 1.0);
    EXPECT_EQ(a.dist_params(1, 4).mean[0], -1.0);
    EXPECT_EQ(a.dist_params(1, 3).variance, 0.0);
    EXPECT_EQ(a.dist_params(1, 4).variance, 2.0);
}

TEST(Adversary, IndexAndShapeErrors) {
    AdversarySpec s;
    s.means = {{0.0, 0.0}};
    AdversarySchedule a(s, 2, 5, 2);
    EXPECT_THROW(a.dist_params(0, 1), Error);
    EXPECT_THROW(a.dist_params(6, 1), Error);
    EXPECT_THROW(a.dist_params(1, 3), Error);
    s.means = {{0.0}};
    EXPECT_THROW(AdversarySchedule(s, 2, 5, 2), ConfigError);
    AdversarySpec p;
    p.kind = AdversaryKind::piecewise_shift;
    p.shift_times = {3};
    p.segments = {{0.0}};
    EXPECT_THROW(AdversarySchedule(p, 1, 5, 1), ConfigError);
}
