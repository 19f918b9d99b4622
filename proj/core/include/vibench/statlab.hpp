#pragma once

#include <string>
#include <vector>

namespace vibench {

/// Standard normal CDF.
double normal_cdf(double z);

/// Inverse standard normal CDF (Wichura's PPND16 rational approximations).
double normal_quantile(double p);

/// Student-t quantile, solved by bisection on the regularized incomplete
/// beta representation of the CDF.
double t_quantile(double p, double df);

struct ShapiroResult {
    double w = 0.0;
    double p = 0.0;
};

/// Shapiro-Wilk W and Royston's normalizing-transformation p-value.
/// Requires 3 <= n <= 5000 and a non-constant sample.
ShapiroResult shapiro_wilk(const std::vector<double>& x);

struct MwuResult {
    double u = 0.0; // statistic for the first group: pairs x>y plus half-ties
    double p = 0.0; // two-sided
};

/// Exact enumeration when n*m <= 400 with no ties; otherwise the normal
/// approximation with tie and continuity corrections.
MwuResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y);

/// (mean(x) - mean(y)) / pooled mean-absolute-deviation, size-weighted.
double cohens_d_mad(const std::vector<double>& x, const std::vector<double>& y);

struct Ci95 {
    double lo = 0.0;
    double hi = 0.0;
};

/// Student-t interval on the mean: mean +- t(0.975, n-1) * s / sqrt(n).
Ci95 ci95_mean(const std::vector<double>& x);

struct ComparisonRow {
    std::string group_a;
    std::string group_b;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    double mean_a = 0.0;
    double std_a = 0.0; // sample standard deviation (n-1)
    double mean_b = 0.0;
    double std_b = 0.0;
    ShapiroResult shapiro_a;
    ShapiroResult shapiro_b;
    MwuResult mwu;
    Ci95 ci_a;
    Ci95 ci_b;
    double effect_d = 0.0;
};

/// Composes the four tests over two groups of per-run scores (each n >= 3).
ComparisonRow compare_groups(const std::string& name_a, const std::vector<double>& a,
                             const std::string& name_b, const std::vector<double>& b);

/// A non-empty provenance_line is written verbatim above the header.
void save_comparisons(const std::vector<ComparisonRow>& rows, const std::string& path,
                      const std::string& provenance_line = "");

/// Fixed-width text table: mean +- std, normality p, U (p), 95% CI, effect d.
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

} // namespace vibench
