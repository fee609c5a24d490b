#include "som/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace som {

namespace {

constexpr double kCfTol = 1e-12;   // per-iteration convergence threshold
constexpr int kCfMaxIter = 500;
constexpr double kCfFloor = 1e-300;  // keeps Lentz denominators away from 0

// Continued fraction for the incomplete beta function (Lentz's method).
// Convergent for z < (a+1)/(a+b+2); callers switch via symmetry otherwise.
double beta_cf(double a, double b, double z) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * z / qap;
    if (std::fabs(d) < kCfFloor) d = kCfFloor;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kCfMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * z / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kCfFloor) d = kCfFloor;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kCfFloor) c = kCfFloor;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kCfFloor) d = kCfFloor;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kCfFloor) c = kCfFloor;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kCfTol) return h;
    }
    return h;  // converged well before the cap for any df this library sees
}

double regularized_inc_beta(double a, double b, double z) {
    if (z <= 0.0) return 0.0;
    if (z >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(z) + b * std::log1p(-z);
    const double front = std::exp(ln_front);
    if (z < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, z) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - z) / b;
}

struct SumsOfSquares {
    double between = 0.0;
    double within = 0.0;
    int df_between = 0;
    int df_within = 0;
    double scale = 0.0;  // max |x|, for degeneracy thresholds
};

SumsOfSquares decompose(const Groups& groups) {
    if (groups.size() < 2)
        throw DomainError("need at least 2 groups, got " + std::to_string(groups.size()));
    std::size_t total_n = 0;
    double grand_sum = 0.0;
    double scale = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2)
            throw DomainError("each group needs at least 2 observations, got " +
                              std::to_string(g.size()));
        for (double x : g) {
            if (!std::isfinite(x)) throw DomainError("non-finite observation");
            grand_sum += x;
            scale = std::max(scale, std::fabs(x));
        }
        total_n += g.size();
    }
    const double grand_mean = grand_sum / static_cast<double>(total_n);

    SumsOfSquares ss;
    ss.scale = scale;
    for (const auto& g : groups) {
        double sum = 0.0;
        for (double x : g) sum += x;
        const double mean = sum / static_cast<double>(g.size());
        const double dm = mean - grand_mean;
        ss.between += static_cast<double>(g.size()) * dm * dm;
        for (double x : g) {
            const double d = x - mean;
            ss.within += d * d;
        }
    }
    ss.df_between = static_cast<int>(groups.size()) - 1;
    ss.df_within = static_cast<int>(total_n - groups.size());
    return ss;
}

// A sum of squares indistinguishable from accumulated rounding noise.
bool negligible(double ss, double scale) {
    const double unit = std::max(1.0, scale * scale);
    return ss <= 1e-12 * unit;
}

}  // namespace

double f_cdf(double x, int d1, int d2) {
    if (d1 < 1 || d2 < 1)
        throw BoundsError("degrees of freedom must be positive, got (" +
                          std::to_string(d1) + ", " + std::to_string(d2) + ")");
    if (!std::isfinite(x)) throw DomainError("f_cdf requires finite x");
    if (x <= 0.0) return 0.0;
    const double z = d1 * x / (d1 * x + static_cast<double>(d2));
    return regularized_inc_beta(d1 / 2.0, d2 / 2.0, z);
}

TestResult one_way_anova(const Groups& groups) {
    const SumsOfSquares ss = decompose(groups);
    TestResult r;
    r.df_between = ss.df_between;
    r.df_within = ss.df_within;
    if (negligible(ss.within, ss.scale)) {
        if (negligible(ss.between, ss.scale))
            throw DomainError("all observations identical: F undefined");
        r.statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    const double ms_between = ss.between / ss.df_between;
    const double ms_within = ss.within / ss.df_within;
    r.statistic = ms_between / ms_within;
    r.p_value = 1.0 - f_cdf(r.statistic, r.df_between, r.df_within);
    return r;
}

TestResult levene_test(const Groups& groups, LeveneCenter center) {
    Groups deviations;
    deviations.reserve(groups.size());
    for (const auto& g : groups) {
        if (g.size() < 2)
            throw DomainError("each group needs at least 2 observations, got " +
                              std::to_string(g.size()));
        double c;
        if (center == LeveneCenter::Mean) {
            double sum = 0.0;
            for (double x : g) sum += x;
            c = sum / static_cast<double>(g.size());
        } else {
            std::vector<double> sorted = g;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t mid = sorted.size() / 2;
            c = sorted.size() % 2 == 1 ? sorted[mid]
                                       : 0.5 * (sorted[mid - 1] + sorted[mid]);
        }
        std::vector<double> dev;
        dev.reserve(g.size());
        for (double x : g) dev.push_back(std::fabs(x - c));
        deviations.push_back(std::move(dev));
    }

    const SumsOfSquares ss = decompose(deviations);
    TestResult r;
    r.df_between = ss.df_between;
    r.df_within = ss.df_within;
    if (negligible(ss.within, ss.scale)) {
        if (negligible(ss.between, ss.scale)) {
            // identical spread everywhere: homogeneity holds trivially
            r.statistic = 0.0;
            r.p_value = 1.0;
            return r;
        }
        r.statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    if (negligible(ss.between, ss.scale)) {
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    r.statistic = (ss.between / ss.df_between) / (ss.within / ss.df_within);
    r.p_value = 1.0 - f_cdf(r.statistic, r.df_between, r.df_within);
    return r;
}

}  // namespace som
