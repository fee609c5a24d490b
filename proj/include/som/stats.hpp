// One-way ANOVA, variance-homogeneity testing, and the F-distribution
// CDF they need.  Everything is self-contained and pure.
#pragma once

#include <vector>

#include "som/errors.hpp"

namespace som {

// Samples grouped by factor level (accuracy percentages in practice).
using Groups = std::vector<std::vector<double>>;

struct TestResult {
    double statistic = 0.0;  // F (ANOVA) or W (Levene)
    double p_value = 1.0;    // 1 - f_cdf(statistic, df_between, df_within)
    int df_between = 0;
    int df_within = 0;
};

// P(X <= x) for X ~ F(d1, d2), via the regularized incomplete beta
// function I_z(d1/2, d2/2) with z = d1*x / (d1*x + d2).  Continued
// fractions, absolute error <= 1e-10.  x must be finite; x <= 0 gives 0.
double f_cdf(double x, int d1, int d2);

// F = MS_between / MS_within, df = (k-1, N-k), upper-tail p.
// Needs >= 2 groups with >= 2 observations each.  All-identical data
// leaves F undefined and raises DomainError.  Zero within-group
// variance with distinct means yields F = inf, p = 0.
TestResult one_way_anova(const Groups& groups);

enum class LeveneCenter { Mean, Median };

// Levene's homogeneity-of-variance test: ANOVA over absolute deviations
// from each group's center (mean by default, median = Brown-Forsythe).
// Identical deviation sets are perfectly homogeneous: W = 0, p = 1.
TestResult levene_test(const Groups& groups, LeveneCenter center = LeveneCenter::Mean);

}  // namespace som
