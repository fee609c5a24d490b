#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "som/rng.hpp"
#include "som/stats.hpp"
#include "support/f_oracle.hpp"

using namespace som;
using som::test_support::f_cdf_oracle;

namespace {

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

Groups random_groups(Rng& rng, int min_groups = 2, int max_groups = 5) {
    const int k = min_groups + static_cast<int>(rng.next_below(
                                   static_cast<std::uint64_t>(max_groups - min_groups + 1)));
    Groups g(static_cast<std::size_t>(k));
    for (auto& group : g) {
        const std::size_t n = 2 + rng.next_below(7);
        for (std::size_t i = 0; i < n; ++i)
            group.push_back(60.0 + 8.0 * rng.next_gaussian());
    }
    return g;
}

}  // namespace

TEST_CASE("f_cdf at the origin and at extreme x") {
    CHECK(f_cdf(0.0, 1, 1) == 0.0);
    CHECK(f_cdf(0.0, 3, 7) == 0.0);
    CHECK(f_cdf(-2.0, 5, 5) == 0.0);
    CHECK(f_cdf(1e6, 1, 2) >= 1.0 - 1e-6);
    CHECK(f_cdf(1e6, 2, 3) >= 1.0 - 1e-6);
    CHECK(f_cdf(1e6, 5, 5) >= 1.0 - 1e-6);
}

TEST_CASE("f_cdf median symmetry: f_cdf(1, d, d) = 1/2") {
    for (int d : {1, 2, 5, 10, 50}) CHECK(near(f_cdf(1.0, d, d), 0.5, 1e-10));
}

TEST_CASE("f_cdf closed form at (8, 1, 2)") {
    // I_z(1/2, 1) = sqrt(z) with z = d1*x/(d1*x+d2) = 8/10
    CHECK(near(f_cdf(8.0, 1, 2), std::sqrt(0.8), 1e-10));
}

TEST_CASE("f_cdf is nondecreasing in x") {
    for (auto [d1, d2] : std::vector<std::pair<int, int>>{{1, 1}, {3, 12}, {7, 2}}) {
        double prev = 0.0;
        for (double x = 0.0; x <= 40.0; x += 0.25) {
            const double v = f_cdf(x, d1, d2);
            CHECK(v >= prev);
            CHECK(v <= 1.0);
            prev = v;
        }
    }
}

TEST_CASE("f_cdf agrees with the numeric-integration oracle") {
    Rng rng(0x5eedf00d);
    for (int i = 0; i < 200; ++i) {
        const int d1 = 1 + static_cast<int>(rng.next_below(30));
        const int d2 = 1 + static_cast<int>(rng.next_below(30));
        const double x = 20.0 * rng.next_double();
        CHECK(near(f_cdf(x, d1, d2), f_cdf_oracle(x, d1, d2), 1e-10));
    }
}

TEST_CASE("f_cdf rejects bad degrees of freedom and non-finite x") {
    CHECK_THROWS_AS(f_cdf(1.0, 0, 3), BoundsError);
    CHECK_THROWS_AS(f_cdf(1.0, 3, -1), BoundsError);
    CHECK_THROWS_AS(f_cdf(std::numeric_limits<double>::infinity(), 2, 2), DomainError);
    CHECK_THROWS_AS(f_cdf(std::nan(""), 2, 2), DomainError);
}

TEST_CASE("anova with equal group means gives F = 0, p = 1") {
    const TestResult r = one_way_anova({{1, 2, 3}, {1, 2, 3}});
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK(r.df_between == 1);
    CHECK(r.df_within == 4);
}

TEST_CASE("anova hand-decomposed example: ([1,2],[3,4])") {
    // SSb = 4, SSw = 1, df = (1, 2) -> F = (4/1)/(1/2) = 8 exactly;
    // closed-form tail for d1=1, d2=2: p = 1 - sqrt(F/(F+2)) = 1 - sqrt(0.8)
    const TestResult r = one_way_anova({{1, 2}, {3, 4}});
    CHECK(r.statistic == 8.0);
    CHECK(r.df_between == 1);
    CHECK(r.df_within == 2);
    CHECK(near(r.p_value, 1.0 - std::sqrt(0.8), 1e-10));
}

TEST_CASE("anova rejects degenerate and undersized inputs") {
    CHECK_THROWS_AS(one_way_anova({{5, 5}, {5, 5}}), DomainError);
    CHECK_THROWS_AS(one_way_anova({{0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}}), DomainError);
    CHECK_THROWS_AS(one_way_anova({{1, 2}}), DomainError);
    CHECK_THROWS_AS(one_way_anova({{1}, {2, 3}}), DomainError);
    CHECK_THROWS_AS(one_way_anova({{1, 2}, {3, std::nan("")}}), DomainError);
}

TEST_CASE("anova with zero within-group variance but distinct means") {
    const TestResult r = one_way_anova({{1, 1}, {2, 2}});
    CHECK(std::isinf(r.statistic));
    CHECK(r.p_value == 0.0);
}

TEST_CASE("anova on three groups from one seeded normal stream") {
    Rng rng(0x7e57da7a);
    Groups g(3);
    for (auto& grp : g)
        for (int i = 0; i < 6; ++i) grp.push_back(60.0 + 8.0 * rng.next_gaussian());
    const TestResult r = one_way_anova(g);
    // values frozen from the numeric-integration reference oracle
    CHECK(near(r.statistic, 1.6105231447726296, 1e-12));
    CHECK(near(r.p_value, 0.23247947019392634, 1e-8));
}

TEST_CASE("anova p-values match the numeric-integration oracle") {
    Rng rng(0xa0a0a0a0);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        const Groups g = random_groups(rng);
        const TestResult r = one_way_anova(g);
        const double oracle_p = 1.0 - f_cdf_oracle(r.statistic, r.df_between, r.df_within);
        CHECK(near(r.p_value, oracle_p, 1e-8));
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("anova is invariant under scaling and shifting") {
    Rng rng(0xbeefcafe);
    for (int i = 0; i < 20; ++i) {
        const Groups g = random_groups(rng);
        const TestResult base = one_way_anova(g);

        // power-of-two scaling is exact in binary floating point
        Groups doubled = g;
        for (auto& grp : doubled)
            for (auto& x : grp) x *= 128.0;
        const TestResult scaled = one_way_anova(doubled);
        CHECK(scaled.statistic == base.statistic);
        CHECK(scaled.p_value == base.p_value);

        Groups shifted = g;
        for (auto& grp : shifted)
            for (auto& x : grp) x = x * 3.7 + 11.25;
        const TestResult moved = one_way_anova(shifted);
        CHECK(near(moved.statistic, base.statistic, 1e-9 * (1.0 + base.statistic)));
        CHECK(near(moved.p_value, base.p_value, 1e-9));
    }
}

TEST_CASE("levene on identical deviation sets is perfectly homogeneous") {
    const TestResult r = levene_test({{1, 2}, {1, 2}});
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("levene with zero deviation variance flags heterogeneity hard") {
    // deviations: [5,5] vs [1,1] -> SSw = 0, SSb = 16
    const TestResult r = levene_test({{0, 10}, {4, 6}});
    CHECK(std::isinf(r.statistic));
    CHECK(r.p_value == 0.0);
}

TEST_CASE("levene separates a constant group from a spread one") {
    // deviations: [0,0,0] vs [3,5,2] -> SSb = 50/3, SSw = 14/3, df (1,4)
    const TestResult r = levene_test({{5, 5, 5}, {1, 9, 2}});
    CHECK(near(r.statistic, 100.0 / 7.0, 1e-9));
    CHECK(r.p_value < 0.05);
    const double oracle_p = 1.0 - f_cdf_oracle(r.statistic, 1, 4);
    CHECK(near(r.p_value, oracle_p, 1e-8));
}

TEST_CASE("levene centering choice changes the statistic") {
    const Groups g = {{1, 2, 10}, {3, 4, 5}};
    const TestResult mean_centered = levene_test(g, LeveneCenter::Mean);
    const TestResult median_centered = levene_test(g, LeveneCenter::Median);
    CHECK(near(mean_centered.statistic, 98.0 / 11.0, 1e-9));
    CHECK(near(median_centered.statistic, 49.0 / 58.0, 1e-9));
    CHECK(mean_centered.p_value < median_centered.p_value);
}
