#pragma once

// Direct-formula reference implementations used to cross-check the library.
// Everything here is written independently of core/: the spectrum comes from
// a naive O(N^2) DFT and each feature follows its printed definition.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "vibench/signal.hpp"

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

inline std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> table(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ang = -2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
        table[i] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) acc += x[t] * table[(k * t) % n];
        out[k] = acc;
    }
    return out;
}

struct Spectrum {
    std::vector<double> freq;
    std::vector<double> mag;
    std::vector<double> power;
};

inline Spectrum one_sided_spectrum(const std::vector<double>& x, double nu) {
    std::vector<std::complex<double>> cx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) cx[i] = {x[i], 0.0};
    auto full = dft(cx);
    Spectrum s;
    const std::size_t b = x.size() / 2 + 1;
    for (std::size_t k = 0; k < b; ++k) {
        s.freq.push_back(static_cast<double>(k) * nu / static_cast<double>(x.size()));
        s.mag.push_back(std::abs(full[k]));
        s.power.push_back(std::abs(full[k]) * std::abs(full[k]));
    }
    return s;
}

inline double mean_of(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double median_by_nth(std::vector<double> v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), mid - 1, v.end());
    return 0.5 * (*(mid - 1) + hi);
}

inline std::map<std::string, double> statistical_features(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    std::map<std::string, double> f;

    double energy = 0.0;
    for (double v : x) energy += v * v;
    f["abs_energy"] = energy;
    f["avg_power"] = energy / n;
    f["rms"] = std::sqrt(energy / n);
    f["max"] = *std::max_element(x.begin(), x.end());
    f["min"] = *std::min_element(x.begin(), x.end());

    const double mean = mean_of(x);
    f["mean"] = mean;

    double sum_abs = 0.0;
    for (double v : x) sum_abs += std::abs(v);
    double h = 0.0;
    if (sum_abs > 0.0) {
        for (double v : x) {
            const double p = std::abs(v) / sum_abs;
            if (p > 0.0) h -= p * std::log(p);
        }
    }
    f["entropy"] = h;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    f["mean_abs_dev"] = mad / n;
    f["std"] = std::sqrt(m2);
    f["kurtosis"] = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
    f["skewness"] = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;

    const double med = median_by_nth(x);
    f["median"] = med;
    std::vector<double> dev;
    for (double v : x) dev.push_back(std::abs(v - med));
    f["median_abs_dev"] = median_by_nth(dev);
    return f;
}

inline std::map<std::string, double> spectral_features(const std::vector<double>& x, double nu) {
    const Spectrum s = one_sided_spectrum(x, nu);
    const std::size_t b = s.power.size();
    const double db = static_cast<double>(b);
    std::map<std::string, double> f;

    const double total_power = std::accumulate(s.power.begin(), s.power.end(), 0.0);
    const double total_mag = std::accumulate(s.mag.begin(), s.mag.end(), 0.0);

    std::size_t argmax = 0;
    for (std::size_t k = 1; k < b; ++k) {
        if (s.power[k] > s.power[argmax]) argmax = k;
    }
    f["max_power"] = s.power[argmax];
    f["max_freq_hz"] = s.freq[argmax];

    auto first_reaching = [&](double target) {
        double cum = 0.0;
        for (std::size_t k = 0; k < b; ++k) {
            cum += s.power[k];
            if (cum >= target) return s.freq[k];
        }
        return s.freq[b - 1];
    };
    f["median_freq_hz"] = first_reaching(total_power / 2.0);
    f["power_bandwidth_hz"] = first_reaching(total_power * 0.95);
    f["spectral_rolloff_hz"] = first_reaching(total_power * 0.95);
    f["spectral_rollon_hz"] = first_reaching(total_power * 0.05);

    double centroid = 0.0;
    for (std::size_t k = 0; k < b; ++k) centroid += s.freq[k] * s.mag[k];
    centroid /= total_mag;
    f["spectral_centroid_hz"] = centroid;

    double spread = 0.0;
    for (std::size_t k = 0; k < b; ++k) spread += (s.freq[k] - centroid) * (s.freq[k] - centroid) * s.mag[k];
    f["spectral_spread_hz"] = std::sqrt(spread / total_mag);

    double dec = 0.0;
    for (std::size_t k = 2; k <= b; ++k) dec += (s.mag[k - 1] - s.mag[0]) / static_cast<double>(k - 1);
    f["spectral_decrease"] = dec / total_mag;

    // least squares of power against bin index, mean-centered form
    const double kbar = (db - 1.0) / 2.0;
    const double pbar = total_power / db;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
        sxy += (static_cast<double>(k) - kbar) * (s.power[k] - pbar);
        sxx += (static_cast<double>(k) - kbar) * (static_cast<double>(k) - kbar);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    double dist = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
        const double fit = pbar + slope * (static_cast<double>(k) - kbar);
        dist += (s.power[k] - fit) * (s.power[k] - fit);
    }
    f["spectral_distance"] = std::sqrt(dist);

    double hs = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
        const double p = s.power[k] / total_power;
        if (p > 0.0) hs -= p * std::log(p);
    }
    f["spectral_entropy"] = hs;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
        const double d = s.power[k] - pbar;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= db;
    m3 /= db;
    m4 /= db;
    f["spectral_kurtosis"] = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
    f["spectral_skewness"] = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;

    double num = 0.0, da = 0.0, dbb = 0.0;
    for (std::size_t k = 0; k + 1 < b; ++k) {
        num += s.mag[k] * s.mag[k + 1];
        da += s.mag[k] * s.mag[k];
        dbb += s.mag[k + 1] * s.mag[k + 1];
    }
    f["spectral_variation"] = (da > 0.0 && dbb > 0.0) ? 1.0 - num / std::sqrt(da * dbb) : 0.0;

    double wsum = 0.0;
    const std::size_t half = x.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
        wsum += std::abs((x[2 * i] - x[2 * i + 1]) / std::sqrt(2.0));
    }
    f["wavelet_abs_mean"] = wsum / static_cast<double>(half);
    return f;
}

/// |a - b| within rel * max(|a|, |b|), falling back to rel as an absolute
/// bound around zero.
inline bool close(double a, double b, double rel) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= rel * std::max(scale, 1.0);
}

/// O(n^2) rank statistic: fraction of (abnormal, normal) pairs where the
/// abnormal window outscores the normal one, ties counted half.
inline double pairwise_auc(const std::vector<double>& scores,
                           const std::vector<vibench::Label>& labels) {
    double won = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != vibench::Label::Abnormal) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != vibench::Label::Normal) continue;
            ++pairs;
            if (scores[i] > scores[j]) {
                won += 1.0;
            } else if (scores[i] == scores[j]) {
                won += 0.5;
            }
        }
    }
    return won / static_cast<double>(pairs);
}

} // namespace oracle
