#pragma once

// Descriptive statistics, the studentized range distribution, Tukey-Kramer pairwise
// comparisons and the Welch / pooled two-sample t tests.

#include "finray/error.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace finray::stats {

inline double mean(std::span<const double> x)
{
    require(!x.empty(), "mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample standard deviation (n - 1 denominator); 0 for a single observation.
inline double stddev(std::span<const double> x)
{
    require(!x.empty(), "standard deviation of an empty sample");
    if (x.size() < 2)
        return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x)
        ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

namespace detail {

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
inline double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(range of k standard normals <= w) = k * int phi(z) [Phi(z) - Phi(z - w)]^(k-1) dz.
inline double normal_range_cdf(double w, int k)
{
    if (w <= 0.0)
        return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double z) {
        const double d = Phi(z) - Phi(z - w);
        return d <= 0.0 ? 0.0 : phi(z) * std::pow(d, k - 1);
    };
    double err = 0.0;
    const double v = k * gauss_kronrod<double, 61>::integrate(f, -9.0, 9.0 + w, 15, 1e-13, &err);
    return std::min(1.0, std::max(0.0, v));
}

} // namespace detail

// CDF of the studentized range Q = range / s for k groups and df degrees of freedom,
// where s^2 ~ chi^2_df / df. df = infinity gives the normal range.
inline double studentized_range_cdf(double q, int k, double df)
{
    require(k >= 2, "studentized range needs k >= 2");
    require(df > 0.0, "studentized range needs df > 0");
    if (q <= 0.0)
        return 0.0;
    if (std::isinf(df))
        return detail::normal_range_cdf(q, k);
    using boost::math::quadrature::gauss_kronrod;
    // Density of s = sqrt(chi^2_df / df), in log form for large df.
    const double log_norm = 0.5 * df * std::log(df) - boost::math::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
    auto integrand = [&](double s) {
        if (s <= 0.0)
            return 0.0;
        const double log_f = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
        return std::exp(log_f) * detail::normal_range_cdf(q * s, k);
    };
    // The density is concentrated around s = 1 with spread ~ 1/sqrt(2 df).
    const double spread = 1.0 / std::sqrt(2.0 * df);
    const double hi = 1.0 + 40.0 * spread + 10.0;
    double err = 0.0;
    const double v = gauss_kronrod<double, 61>::integrate(integrand, 0.0, hi, 15, 1e-12, &err);
    return std::min(1.0, std::max(0.0, v));
}

inline double studentized_range_sf(double q, int k, double df) { return 1.0 - studentized_range_cdf(q, k, df); }

// Critical value q such that P(Q <= q) = p, by bracketing and TOMS 748.
inline double studentized_range_quantile(double p, int k, double df)
{
    require(p > 0.0 && p < 1.0, "quantile probability must be in (0, 1)");
    auto f = [&](double q) { return studentized_range_cdf(q, k, df) - p; };
    double lo = 1e-3;
    double hi = 4.0;
    while (f(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        require(hi < 1e6, "studentized range quantile did not bracket");
    }
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (r.first + r.second);
}

struct TTest {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

// Pooled-variance two-sample t test (two-sided).
inline TTest pooled_t_test(std::span<const double> a, std::span<const double> b)
{
    require(a.size() >= 2 && b.size() >= 2, "t test needs at least two observations per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double sa = stddev(a);
    const double sb = stddev(b);
    TTest r;
    r.df = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * sa * sa + (nb - 1.0) * sb * sb) / r.df;
    const double se = std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
    const double diff = mean(a) - mean(b);
    if (se == 0.0) {
        r.t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
        r.p_value = diff == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t = diff / se;
    const boost::math::students_t dist(r.df);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

// Welch's unequal-variance t test (two-sided).
inline TTest welch_t_test(std::span<const double> a, std::span<const double> b)
{
    require(a.size() >= 2 && b.size() >= 2, "t test needs at least two observations per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = stddev(a) * stddev(a) / na;
    const double vb = stddev(b) * stddev(b) / nb;
    const double diff = mean(a) - mean(b);
    TTest r;
    if (va + vb == 0.0) {
        r.df = na + nb - 2.0;
        r.t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
        r.p_value = diff == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t = diff / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    const boost::math::students_t dist(r.df);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

struct HsdPair {
    std::size_t a = 0;
    std::size_t b = 0;
    double mean_diff = 0.0; // mean(b) - mean(a)
    double q = 0.0;         // NaN when the pooled variance is zero
    double p_value = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool significant = false;
};

struct HsdTable {
    double alpha = 0.05;
    double mse = 0.0;
    double df = 0.0;
    double q_critical = 0.0;
    bool degenerate = false; // pooled within-group variance is exactly zero
    std::vector<HsdPair> pairs;
};

// Tukey-Kramer honestly-significant-difference comparisons of all group pairs.
// q = |mean_i - mean_j| / sqrt(MSE/2 (1/n_i + 1/n_j)) against the studentized range
// with k groups and N - k degrees of freedom. A zero pooled variance is flagged as
// degenerate: q is left undefined and a pair is significant iff its means differ.
inline HsdTable tukey_hsd(const std::vector<std::vector<double>>& groups, double alpha = 0.05)
{
    require(groups.size() >= 2, "Tukey HSD needs at least two groups");
    require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
    std::vector<double> means;
    double ss = 0.0;
    double total = 0.0;
    for (const auto& g : groups) {
        require(g.size() >= 2, "each group needs at least two observations");
        const double m = mean(g);
        means.push_back(m);
        for (double v : g)
            ss += (v - m) * (v - m);
        total += static_cast<double>(g.size());
    }
    const int k = static_cast<int>(groups.size());
    HsdTable t;
    t.alpha = alpha;
    t.df = total - k;
    t.mse = ss / t.df;
    t.degenerate = t.mse == 0.0;
    t.q_critical = studentized_range_quantile(1.0 - alpha, k, t.df);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            HsdPair p;
            p.a = i;
            p.b = j;
            p.mean_diff = means[j] - means[i];
            const double se = std::sqrt(0.5 * t.mse *
                                        (1.0 / static_cast<double>(groups[i].size()) +
                                         1.0 / static_cast<double>(groups[j].size())));
            if (t.degenerate) {
                p.q = std::numeric_limits<double>::quiet_NaN();
                p.significant = p.mean_diff != 0.0;
                p.p_value = p.significant ? 0.0 : 1.0;
                p.ci_low = p.ci_high = p.mean_diff;
            } else {
                p.q = std::abs(p.mean_diff) / se;
                p.p_value = std::max(0.0, studentized_range_sf(p.q, k, t.df));
                p.significant = p.q > t.q_critical;
                p.ci_low = p.mean_diff - t.q_critical * se;
                p.ci_high = p.mean_diff + t.q_critical * se;
            }
            t.pairs.push_back(p);
        }
    }
    return t;
}

} // namespace finray::stats
