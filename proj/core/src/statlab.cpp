#include "vibench/statlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "vibench/errors.hpp"
#include "vibench/io_util.hpp"

namespace vibench {

namespace {

double mean_of(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
}

double sample_std(const std::vector<double>& x) {
    const double mu = mean_of(x);
    double acc = 0.0;
    for (double v : x) acc += (v - mu) * (v - mu);
    return std::sqrt(acc / static_cast<double>(x.size() - 1));
}

double mean_abs_dev(const std::vector<double>& x) {
    const double mu = mean_of(x);
    double acc = 0.0;
    for (double v : x) acc += std::abs(v - mu);
    return acc / static_cast<double>(x.size());
}

// ---- regularized incomplete beta (continued fraction, Lentz) ----

double betacf(double a, double b, double x) {
    constexpr double eps = 3e-16;
    constexpr double fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    const double x = df / (df + t * t);
    const double half_tail = 0.5 * ibeta(0.5 * df, 0.5, x);
    return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

// ---- Mann-Whitney helpers ----

/// Exact null distribution of the integer U statistic: count[u] arrangements,
/// f(i, j, u) = f(i-1, j, u-j) + f(i, j-1, u). Counts stay far below 2^53 for
/// the n*m <= 400 exact regime, so doubles hold them exactly.
double exact_two_sided_p(std::size_t n, std::size_t m, double u_stat) {
    const std::size_t umax = n * m;
    std::vector<std::vector<double>> f(n + 1, std::vector<double>(umax + 1, 0.0));
    for (std::size_t i = 0; i <= n; ++i) f[i][0] = 1.0; // j = 0 column
    for (std::size_t j = 1; j <= m; ++j) {
        // in-place roll over j: f[i][u] currently holds f(i, j-1, u)
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t u = 1; u <= i * j; ++u) {
                const double from_smaller_i = u >= j ? f[i - 1][u - j] : 0.0;
                f[i][u] += from_smaller_i;
            }
        }
        // f[0][u] stays [u == 0]
    }
    double total = 0.0;
    for (std::size_t u = 0; u <= umax; ++u) total += f[n][u];
    const auto ui = static_cast<std::size_t>(std::llround(u_stat));
    double cdf_lo = 0.0;
    for (std::size_t u = 0; u <= ui; ++u) cdf_lo += f[n][u];
    const double p_lo = cdf_lo / total;
    const double p_hi = 1.0 - (cdf_lo - f[n][ui]) / total; // P(U >= ui)
    return std::min(1.0, 2.0 * std::min(p_lo, p_hi));
}

// ---- Shapiro-Wilk (Royston's AS R94 approximation) ----

ShapiroResult shapiro_impl(std::vector<double> x) {
    const std::size_t n = x.size();
    std::sort(x.begin(), x.end());

    std::vector<double> m(n);
    double ssq_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) /
                               (static_cast<double>(n) + 0.25));
        ssq_m += m[i] * m[i];
    }

    std::vector<double> a(n, 0.0);
    if (n == 3) {
        a[0] = -std::sqrt(0.5);
        a[2] = std::sqrt(0.5);
    } else {
        const double u = 1.0 / std::sqrt(static_cast<double>(n));
        const double rsqrt_ssq = 1.0 / std::sqrt(ssq_m);
        const double cn = m[n - 1] * rsqrt_ssq;
        a[n - 1] = cn + u * (0.221157 +
                             u * (-0.147981 + u * (-2.071190 + u * (4.434685 + u * -2.706056))));
        a[0] = -a[n - 1];
        std::size_t first_mid = 1;
        double phi;
        if (n > 5) {
            const double cn1 = m[n - 2] * rsqrt_ssq;
            a[n - 2] = cn1 + u * (0.042981 + u * (-0.293762 +
                                                  u * (-1.752461 + u * (5.682633 + u * -3.582633))));
            a[1] = -a[n - 2];
            first_mid = 2;
            phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                  (1.0 - 2.0 * a[n - 1] * a[n - 1] - 2.0 * a[n - 2] * a[n - 2]);
        } else {
            phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * a[n - 1] * a[n - 1]);
        }
        const double inv_sqrt_phi = 1.0 / std::sqrt(phi);
        for (std::size_t i = first_mid; i < n - first_mid; ++i) a[i] = m[i] * inv_sqrt_phi;
    }

    const double xbar = mean_of(x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += a[i] * x[i];
        den += (x[i] - xbar) * (x[i] - xbar);
    }
    double w = num * num / den;
    if (w > 1.0) w = 1.0;

    double p;
    const double dn = static_cast<double>(n);
    if (n == 3) {
        constexpr double pi = 3.14159265358979323846;
        p = 6.0 / pi * (std::asin(std::sqrt(w)) - std::asin(std::sqrt(0.75)));
        p = std::min(1.0, std::max(0.0, p));
    } else if (1.0 - w <= 0.0) {
        p = 1.0;
    } else if (n <= 11) {
        const double gamma = -2.273 + 0.459 * dn;
        const double arg = gamma - std::log(1.0 - w);
        if (arg <= 0.0) {
            p = 0.0;
        } else {
            const double ws = -std::log(arg);
            const double mu = 0.5440 + dn * (-0.39978 + dn * (0.025054 + dn * -0.0006714));
            const double sigma = std::exp(1.3822 + dn * (-0.77857 + dn * (0.062767 + dn * -0.0020322)));
            p = 1.0 - normal_cdf((ws - mu) / sigma);
        }
    } else {
        const double lw = std::log(1.0 - w);
        const double ln = std::log(dn);
        const double mu = -1.5861 + ln * (-0.31082 + ln * (-0.083751 + ln * 0.0038915));
        const double sigma = std::exp(-0.4803 + ln * (-0.082676 + ln * 0.0030302));
        p = 1.0 - normal_cdf((lw - mu) / sigma);
    }
    return {w, p};
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

} // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ConfigError("BadConfig: normal quantile needs p strictly inside (0,1)");
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                      6.7265770927008700853e4) *
                         r +
                     4.5921953931549871457e4) *
                        r +
                    1.3731693765509461125e4) *
                       r +
                   1.9715909503065514427e3) *
                      r +
                  1.3314166789178437745e2) *
                     r +
                 3.3871328727963666080);
        const double den = ((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                                3.9307895800092710610e4) *
                                   r +
                               2.1213794301586595867e4) *
                                  r +
                              5.3941960214247511077e3) *
                                 r +
                             6.8718700749205790830e2) *
                                r +
                            4.2313330701600911252e1) *
                               r +
                           1.0;
        return num / den;
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        const double num = ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                                2.41780725177450611770e-1) *
                                   r +
                               1.27045825245236838258) *
                                  r +
                              3.64784832476320460504) *
                                 r +
                             5.76949722146069140550) *
                                r +
                            4.63033784615654529590) *
                               r +
                           1.42343711074968357734;
        const double den = ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                                1.51986665636164571966e-2) *
                                   r +
                               1.48103976427480074590e-1) *
                                  r +
                              6.89767334985100004550e-1) *
                                 r +
                             1.67638483018380384940) *
                                r +
                            2.05319162663775882187) *
                               r +
                           1.0;
        val = num / den;
    } else {
        r -= 5.0;
        const double num = ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                                1.24266094738807843860e-3) *
                                   r +
                               2.65321895265761230930e-2) *
                                  r +
                              2.96560571828504891230e-1) *
                                 r +
                             1.78482653991729133580) *
                                r +
                            5.46378491116411436990) *
                               r +
                           6.65790464350110377720;
        const double den = ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                                1.84631831751005468180e-5) *
                                   r +
                               7.86869131145613259100e-4) *
                                  r +
                              1.48753612908506148525e-2) *
                                 r +
                             1.36929880922735805310e-1) *
                                r +
                            5.99832206555887937690e-1) *
                               r +
                           1.0;
        val = num / den;
    }
    return q < 0.0 ? -val : val;
}

double t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0) || !(df > 0.0)) {
        throw ConfigError("BadConfig: t quantile needs p in (0,1) and df > 0");
    }
    if (p == 0.5) return 0.0;
    const bool upper = p > 0.5;
    const double target = upper ? p : 1.0 - p;
    double hi = 1.0;
    while (student_t_cdf(hi, df) < target && hi < 1e12) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double t = 0.5 * (lo + hi);
    return upper ? t : -t;
}

ShapiroResult shapiro_wilk(const std::vector<double>& x) {
    if (x.size() < 3 || x.size() > 5000) {
        throw DataError("BadSize: Shapiro-Wilk supports 3 <= n <= 5000, got " +
                        std::to_string(x.size()));
    }
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (*mn == *mx) throw DataError("ConstantSample: Shapiro-Wilk needs a non-constant sample");
    return shapiro_impl(x);
}

MwuResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw DataError("Empty: Mann-Whitney needs both groups non-empty");
    const std::size_t n = x.size(), m = y.size();

    double u = 0.0;
    for (double xi : x) {
        for (double yj : y) {
            if (xi > yj) {
                u += 1.0;
            } else if (xi == yj) {
                u += 0.5;
            }
        }
    }

    // tie structure over the combined sample
    std::vector<double> all;
    all.reserve(n + m);
    all.insert(all.end(), x.begin(), x.end());
    all.insert(all.end(), y.begin(), y.end());
    std::sort(all.begin(), all.end());
    bool has_ties = false;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j] == all[i]) ++j;
        const double t = static_cast<double>(j - i);
        if (t > 1.0) {
            has_ties = true;
            tie_term += t * t * t - t;
        }
        i = j;
    }

    double p;
    if (!has_ties && n * m <= 400) {
        p = exact_two_sided_p(n, m, u);
    } else {
        const double nm = static_cast<double>(n) * static_cast<double>(m);
        const double total = static_cast<double>(n + m);
        const double mu = nm / 2.0;
        const double var = nm * (total + 1.0) / 12.0 -
                           nm * tie_term / (12.0 * total * (total - 1.0));
        if (var <= 0.0) {
            p = 1.0; // all values identical in both groups
        } else {
            double z = 0.0;
            if (u > mu) {
                z = (u - mu - 0.5) / std::sqrt(var);
            } else if (u < mu) {
                z = (u - mu + 0.5) / std::sqrt(var);
            }
            p = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
        }
    }
    return {u, p};
}

double cohens_d_mad(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw DataError("Empty: effect size needs both groups non-empty");
    const double n = static_cast<double>(x.size());
    const double m = static_cast<double>(y.size());
    const double pooled = (n * mean_abs_dev(x) + m * mean_abs_dev(y)) / (n + m);
    if (pooled == 0.0) throw NumericError("ZeroMad: pooled mean absolute deviation is zero");
    return (mean_of(x) - mean_of(y)) / pooled;
}

Ci95 ci95_mean(const std::vector<double>& x) {
    if (x.size() < 2) throw DataError("TooFew: a confidence interval needs n >= 2");
    const double mu = mean_of(x);
    const double s = sample_std(x);
    const double half =
        t_quantile(0.975, static_cast<double>(x.size() - 1)) * s / std::sqrt(static_cast<double>(x.size()));
    return {mu - half, mu + half};
}

ComparisonRow compare_groups(const std::string& name_a, const std::vector<double>& a,
                             const std::string& name_b, const std::vector<double>& b) {
    if (a.size() < 3 || b.size() < 3) {
        throw DataError("TooFew: group comparison needs at least 3 values per group");
    }
    ComparisonRow row;
    row.group_a = name_a;
    row.group_b = name_b;
    row.n_a = a.size();
    row.n_b = b.size();
    row.mean_a = mean_of(a);
    row.std_a = sample_std(a);
    row.mean_b = mean_of(b);
    row.std_b = sample_std(b);
    row.shapiro_a = shapiro_wilk(a);
    row.shapiro_b = shapiro_wilk(b);
    row.mwu = mann_whitney_u(a, b);
    row.ci_a = ci95_mean(a);
    row.ci_b = ci95_mean(b);
    row.effect_d = cohens_d_mad(a, b);
    return row;
}

void save_comparisons(const std::vector<ComparisonRow>& rows, const std::string& path,
                      const std::string& provenance_line) {
    std::string out;
    if (!provenance_line.empty()) {
        out = provenance_line;
        if (out.back() != '\n') out += '\n';
    }
    out +=
        "group_a,group_b,n_a,n_b,mean_a,std_a,mean_b,std_b,shapiro_w_a,shapiro_p_a,"
        "shapiro_w_b,shapiro_p_b,u_statistic,p_value,ci95_a_low,ci95_a_high,ci95_b_low,"
        "ci95_b_high,cohens_d_mad\n";
    for (const auto& r : rows) {
        out += r.group_a + ',' + r.group_b + ',' + std::to_string(r.n_a) + ',' +
               std::to_string(r.n_b);
        for (double v : {r.mean_a, r.std_a, r.mean_b, r.std_b, r.shapiro_a.w, r.shapiro_a.p,
                         r.shapiro_b.w, r.shapiro_b.p, r.mwu.u, r.mwu.p, r.ci_a.lo, r.ci_a.hi,
                         r.ci_b.lo, r.ci_b.hi, r.effect_d}) {
            out += ',';
            out += ioutil::format_double(v);
        }
        out += '\n';
    }
    ioutil::write_file(path, out);
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    auto line = [&](const std::string& group, std::size_t n, double mean, double sd,
                    double shapiro_p, const std::string& utest, const Ci95& ci,
                    const std::string& effect) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%-24s %4zu   %6.3f +- %5.3f   %-11s %-18s %6.3f-%-6.3f  %s\n",
                      group.c_str(), n, mean, sd, fmt("%.4g", shapiro_p).c_str(), utest.c_str(),
                      ci.lo, ci.hi, effect.c_str());
        os << buf;
    };
    os << "group                       n   mean +- std      normality p U (p)              95% CI"
          "         effect d\n";
    for (const auto& r : rows) {
        const std::string utest = fmt("%.6g", r.mwu.u) + " (" + fmt("%.4g", r.mwu.p) + ")";
        line(r.group_a, r.n_a, r.mean_a, r.std_a, r.shapiro_a.p, utest, r.ci_a,
             fmt("%.3f", r.effect_d));
        line(r.group_b, r.n_b, r.mean_b, r.std_b, r.shapiro_b.p, "", r.ci_b, "");
    }
    return os.str();
}

} // namespace vibench
