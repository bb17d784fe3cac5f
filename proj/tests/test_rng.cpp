#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fedsea/rng.hpp"

using namespace fedsea;

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswers) {
    using A = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}), (A{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (A{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (A{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RngStream, SameKeySameDrawsRegardlessOfOrder) {
    const StreamKey a{42, 3, 17, 2, DrawPurpose::data};
    const StreamKey b{42, 3, 18, 2, DrawPurpose::data};
    RngStream s1(a), s2(b);
    const double first_a = s1.normal(), first_b = s2.normal();
    RngStream t2(b), t1(a);
    EXPECT_EQ(t2.normal(), first_b);
    EXPECT_EQ(t1.normal(), first_a);
}

TEST(RngStream, KeyFieldsSeparateStreams) {
    std::set<std::uint64_t> firsts;
    for (std::uint32_t r = 0; r < 4; ++r)
        for (std::uint32_t t = 1; t < 4; ++t)
            for (std::uint32_t m = 1; m < 4; ++m)
                for (auto p : {DrawPurpose::data, DrawPurpose::monte_carlo})
                    firsts.insert(RngStream({9, r, t, m, p}).next_u64());
    EXPECT_EQ(firsts.size(), 4u * 3u * 3u * 2u);
}

TEST(RngStream, UniformAndNormalMoments) {
    RngStream s({1, 0, 0, 0, DrawPurpose::self_test});
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = s.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(sn / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(sn2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Sample, PointMassIsExact) {
    RngStream s({1, 0, 0, 0, DrawPurpose::data});
    const auto p = DistParams::point({1.5, -2.0});
    for (int i = 0; i < 5; ++i) EXPECT_EQ(sample(s, p), (Vector{1.5, -2.0}));
}

TEST(Sample, GaussianMeanWithinFourSigmaOverRootN) {
    RngStream s({5, 0, 0, 0, DrawPurpose::data});
    const double var = 3.0;
    const auto p = DistParams::gaussian({0.0}, var);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = sample(s, p)[0];
        sum += v;
        sq += v * v;
    }
    EXPECT_LE(std::abs(sum / n), 4.0 * std::sqrt(var) / std::sqrt(n));
    EXPECT_NEAR(sq / n, var, 0.05 * var);
}

TEST(Sample, IsotropicVarianceIsTotalTrace) {
    RngStream s({6, 0, 0, 0, DrawPurpose::data});
    const auto p = DistParams::gaussian({0.0, 0.0, 0.0, 0.0}, 2.0);
    double sq = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const auto v = sample(s, p);
        for (double x : v) sq += x * x;
    }
    EXPECT_NEAR(sq / n, 2.0, 0.05);
}

TEST(Sample, UnspecifiedFamilyIsRejected) {
    RngStream s({1, 0, 0, 0, DrawPurpose::data});
    DistParams p;
    p.mean = {0.0};
    EXPECT_THROW(sample(s, p), Error);
}
