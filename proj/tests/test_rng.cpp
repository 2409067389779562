#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <lcd/rng.hpp>

using lcd::Rng;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i)
        ASSERT_EQ(a(), b());
}

TEST(Rng, StreamsDiffer) {
    Rng a = Rng::stream(7, 0), b = Rng::stream(7, 1);
    int equal = 0;
    for (int i = 0; i < 100; ++i)
        equal += a() == b();
    EXPECT_LT(equal, 2);
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
    Rng r(1);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        auto x = r.below(7);
        ASSERT_LT(x, 7u);
        ++hits[x];
    }
    for (int h : hits)
        EXPECT_NEAR(h, 1000, 150);
}

TEST(Rng, UniformMoments) {
    Rng r(3);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
        s2 += u * u;
    }
    EXPECT_NEAR(s / n, 0.5, 0.005);
    EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12, 0.002);
}

TEST(Rng, GammaMoments) {
    Rng r(11);
    for (double shape : {0.5, 1.0, 3.0}) {
        const double scale = 2.0;
        double s = 0, s2 = 0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            double x = r.gamma(shape, scale);
            ASSERT_GT(x, 0.0);
            s += x;
            s2 += x * x;
        }
        const double mean = s / n;
        EXPECT_NEAR(mean, shape * scale, 0.03 * shape * scale);
        EXPECT_NEAR(s2 / n - mean * mean, shape * scale * scale, 0.06 * shape * scale * scale);
    }
}

TEST(Rng, NormalMoments) {
    Rng r(5);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double z = r.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Rng, ShuffleIsPermutation) {
    Rng r(9);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    r.shuffle(std::span<int>(v));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i)
        EXPECT_EQ(sorted[i], i);
    EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}
