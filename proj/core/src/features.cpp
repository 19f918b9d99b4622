#include "vibench/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include <json.hpp>

#include "vibench/fft.hpp"
#include "vibench/io_util.hpp"

namespace vibench {

using nlohmann::json;
namespace io = ioutil;

const std::vector<std::string>& statistical_feature_names() {
    static const std::vector<std::string> names = {
        "abs_energy", "avg_power", "entropy",        "kurtosis", "max",
        "mean",       "mean_abs_dev", "median",      "median_abs_dev", "min",
        "rms",        "skewness",  "std",
    };
    return names;
}

const std::vector<std::string>& spectral_feature_names() {
    static const std::vector<std::string> names = {
        "max_power",           "max_freq_hz",        "median_freq_hz",
        "power_bandwidth_hz",  "spectral_centroid_hz", "spectral_decrease",
        "spectral_distance",   "spectral_entropy",   "spectral_kurtosis",
        "spectral_rolloff_hz", "spectral_rollon_hz", "spectral_skewness",
        "spectral_spread_hz",  "spectral_variation", "wavelet_abs_mean",
    };
    return names;
}

const char* feature_set_name(FeatureSet set) {
    switch (set) {
        case FeatureSet::Statistical: return "stat";
        case FeatureSet::Spectral: return "spec";
        case FeatureSet::Both: return "both";
    }
    return "?";
}

PowerSpectrum periodogram(const std::vector<double>& x, double nu) {
    if (x.size() < 2) {
        throw DataError("TooShort: periodogram needs at least 2 samples, got " +
                        std::to_string(x.size()));
    }
    if (nu <= 0.0) throw ConfigError("BadConfig: sampling rate must be positive");
    const std::size_t n = x.size();
    PowerSpectrum ps;
    ps.bin_width = nu / static_cast<double>(n);
    auto bins = rfft_one_sided(x);
    ps.freqs.resize(bins.size());
    ps.magnitude.resize(bins.size());
    ps.power.resize(bins.size());
    for (std::size_t k = 0; k < bins.size(); ++k) {
        ps.freqs[k] = static_cast<double>(k) * ps.bin_width;
        const double m = std::abs(bins[k]);
        ps.magnitude[k] = m;
        ps.power[k] = m * m;
    }
    return ps;
}

namespace {

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

FeatureVector statistical_features(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 2) {
        throw DataError("TooShort: statistical features need at least 2 samples, got " +
                        std::to_string(n));
    }
    const double dn = static_cast<double>(n);

    double energy = 0.0, sum = 0.0, sum_abs = 0.0;
    double mx = x[0], mn = x[0];
    for (double v : x) {
        energy += v * v;
        sum += v;
        sum_abs += std::abs(v);
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    const double mean = sum / dn;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad_mean = 0.0;
    for (double v : x) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        mad_mean += std::abs(d);
    }
    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
    mad_mean /= dn;

    double entropy = 0.0;
    if (sum_abs > 0.0) {
        for (double v : x) {
            const double p = std::abs(v) / sum_abs;
            if (p > 0.0) entropy -= p * std::log(p);
        }
    }

    FeatureVector out;
    double kurtosis = 0.0, skewness = 0.0;
    if (m2 > 0.0) {
        kurtosis = m4 / (m2 * m2);
        skewness = m3 / (m2 * std::sqrt(m2));
    } else {
        out.degenerate_moment = true;
    }

    const double med = median_of(x);
    std::vector<double> absdev(n);
    for (std::size_t i = 0; i < n; ++i) absdev[i] = std::abs(x[i] - med);
    const double mad_median = median_of(std::move(absdev));

    out.values = {energy,   energy / dn, entropy,    kurtosis, mx,
                  mean,     mad_mean,    med,        mad_median, mn,
                  std::sqrt(energy / dn), skewness, std::sqrt(m2)};
    return out;
}

FeatureVector spectral_features(const std::vector<double>& x, double nu) {
    const std::size_t n = x.size();
    if (n < 4) {
        throw DataError("TooShort: spectral features need at least 4 samples, got " +
                        std::to_string(n));
    }
    // a constant input carries no power outside DC; detected exactly on the
    // input so FFT round-off cannot blur the decision
    const auto [mn_it, mx_it] = std::minmax_element(x.begin(), x.end());
    if (*mn_it == *mx_it) {
        throw NumericError("ZeroSpectrum: constant window has no power outside DC");
    }

    const PowerSpectrum ps = periodogram(x, nu);
    const std::size_t b = ps.power.size();
    const double db = static_cast<double>(b);

    double total_power = 0.0, total_mag = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
        total_power += ps.power[k];
        total_mag += ps.magnitude[k];
    }

    // max power / frequency, first bin on ties
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < b; ++k) {
        if (ps.power[k] > ps.power[argmax]) argmax = k;
    }

    // cumulative-power boundaries: first bin reaching the target mass
    auto cum_bin = [&](double target) {
        double cum = 0.0;
        for (std::size_t k = 0; k < b; ++k) {
            cum += ps.power[k];
            if (cum >= target) return k;
        }
        return b - 1;
    };
    const double f_median = ps.freqs[cum_bin(0.5 * total_power)];
    const double f_bandwidth = ps.freqs[cum_bin(0.95 * total_power)];
    const double f_rolloff = f_bandwidth;
    const double f_rollon = ps.freqs[cum_bin(0.05 * total_power)];

    const double centroid = [&] {
        double acc = 0.0;
        for (std::size_t k = 0; k < b; ++k) acc += ps.freqs[k] * ps.magnitude[k];
        return acc / total_mag;
    }();
    const double spread = [&] {
        double acc = 0.0;
        for (std::size_t k = 0; k < b; ++k) {
            const double d = ps.freqs[k] - centroid;
            acc += d * d * ps.magnitude[k];
        }
        return std::sqrt(acc / total_mag);
    }();

    // decrease over 1-based bins, first bin = DC
    const double decrease = [&] {
        double acc = 0.0;
        for (std::size_t k = 2; k <= b; ++k) {
            acc += (ps.magnitude[k - 1] - ps.magnitude[0]) / static_cast<double>(k - 1);
        }
        return acc / total_mag;
    }();

    // distance of the power spectrum from its least-squares line over bin index
    const double distance = [&] {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t k = 0; k < b; ++k) {
            const double fk = static_cast<double>(k);
            sx += fk;
            sy += ps.power[k];
            sxx += fk * fk;
            sxy += fk * ps.power[k];
        }
        const double denom = db * sxx - sx * sx;
        const double slope = denom != 0.0 ? (db * sxy - sx * sy) / denom : 0.0;
        const double intercept = (sy - slope * sx) / db;
        double acc = 0.0;
        for (std::size_t k = 0; k < b; ++k) {
            const double d = ps.power[k] - (intercept + slope * static_cast<double>(k));
            acc += d * d;
        }
        return std::sqrt(acc);
    }();

    double spec_entropy = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
        const double p = ps.power[k] / total_power;
        if (p > 0.0) spec_entropy -= p * std::log(p);
    }

    FeatureVector out;
    const double p_mean = total_power / db;
    double pm2 = 0.0, pm3 = 0.0, pm4 = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
        const double d = ps.power[k] - p_mean;
        const double d2 = d * d;
        pm2 += d2;
        pm3 += d2 * d;
        pm4 += d2 * d2;
    }
    pm2 /= db;
    pm3 /= db;
    pm4 /= db;
    double spec_kurtosis = 0.0, spec_skewness = 0.0;
    if (pm2 > 0.0) {
        spec_kurtosis = pm4 / (pm2 * pm2);
        spec_skewness = pm3 / (pm2 * std::sqrt(pm2));
    } else {
        out.degenerate_moment = true;
    }

    // adjacent-bin correlation within this window's spectrum
    const double variation = [&] {
        double num = 0.0, da = 0.0, dbn = 0.0;
        for (std::size_t k = 0; k + 1 < b; ++k) {
            num += ps.magnitude[k] * ps.magnitude[k + 1];
            da += ps.magnitude[k] * ps.magnitude[k];
            dbn += ps.magnitude[k + 1] * ps.magnitude[k + 1];
        }
        const double denom = std::sqrt(da * dbn);
        return denom > 0.0 ? 1.0 - num / denom : 0.0;
    }();

    // single-level Haar detail coefficients
    const double wavelet_abs_mean = [&] {
        const std::size_t half = n / 2;
        double acc = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            acc += std::abs(x[2 * i] - x[2 * i + 1]);
        }
        return acc / (std::sqrt(2.0) * static_cast<double>(half));
    }();

    out.values = {ps.power[argmax], ps.freqs[argmax], f_median,  f_bandwidth, centroid,
                  decrease,         distance,         spec_entropy, spec_kurtosis, f_rolloff,
                  f_rollon,         spec_skewness,    spread,    variation,   wavelet_abs_mean};
    return out;
}

// ---- matrix assembly -------------------------------------------------------

namespace {

template <typename Fn>
void annotate_feature_errors(std::size_t window, const std::string& channel, Fn&& fn) {
    auto prefix = [&](const std::string& what) {
        return what + " (window " + std::to_string(window) + ", channel " + channel + ")";
    };
    try {
        fn();
    } catch (const NumericError& e) {
        throw NumericError(prefix(e.what()));
    } catch (const DataError& e) {
        throw DataError(prefix(e.what()));
    }
}

} // namespace

FeatureMatrix extract_matrix(const WindowSet& ws, FeatureSet set) {
    if (ws.size() == 0) throw DataError("EmptyTrain: window set is empty");
    const std::size_t c = ws.width();
    const bool stat = set != FeatureSet::Spectral;
    const bool spec = set != FeatureSet::Statistical;
    const std::size_t per_channel = (stat ? kStatisticalFeatureCount : 0) +
                                    (spec ? kSpectralFeatureCount : 0);

    FeatureMatrix m;
    m.rows = Matrix(ws.size(), c * per_channel);
    m.labels.resize(ws.size());
    m.segment.resize(ws.size());
    m.segment_ids = ws.segment_ids;
    for (std::size_t ch = 0; ch < c; ++ch) {
        if (stat) {
            for (const auto& f : statistical_feature_names()) m.columns.push_back(ws.channel_names[ch] + "." + f);
        }
        if (spec) {
            for (const auto& f : spectral_feature_names()) m.columns.push_back(ws.channel_names[ch] + "." + f);
        }
    }

    std::vector<double> chan(static_cast<std::size_t>(ws.length));
    for (std::size_t w = 0; w < ws.size(); ++w) {
        m.labels[w] = ws.label(w);
        m.segment[w] = ws.windows[w].segment;
        double* row = m.rows.row(w);
        bool degenerate = false;
        for (std::size_t ch = 0; ch < c; ++ch) {
            ws.extract_channel(w, ch, chan.data());
            annotate_feature_errors(w, ws.channel_names[ch], [&] {
                if (stat) {
                    FeatureVector fv = statistical_features(chan);
                    degenerate = degenerate || fv.degenerate_moment;
                    row = std::copy(fv.values.begin(), fv.values.end(), row);
                }
                if (spec) {
                    FeatureVector fv = spectral_features(chan, ws.nu_hz);
                    degenerate = degenerate || fv.degenerate_moment;
                    row = std::copy(fv.values.begin(), fv.values.end(), row);
                }
            });
        }
        if (degenerate) ++m.degenerate_windows;
    }
    return m;
}

FeatureMatrix window_matrix(const WindowSet& ws) {
    if (ws.size() == 0) throw DataError("EmptyTrain: window set is empty");
    const std::size_t c = ws.width();
    const auto n = static_cast<std::size_t>(ws.length);

    FeatureMatrix m;
    m.rows = Matrix(ws.size(), n * c);
    m.labels.resize(ws.size());
    m.segment.resize(ws.size());
    m.segment_ids = ws.segment_ids;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            m.columns.push_back(ws.channel_names[ch] + ".t" + std::to_string(i));
        }
    }
    for (std::size_t w = 0; w < ws.size(); ++w) {
        m.labels[w] = ws.label(w);
        m.segment[w] = ws.windows[w].segment;
        ws.extract_window(w, m.rows.row(w));
    }
    return m;
}

FeatureMatrix slice_feature_set(const FeatureMatrix& both, FeatureSet subset) {
    constexpr std::size_t block = kStatisticalFeatureCount + kSpectralFeatureCount;
    if (both.rows.cols % block != 0) {
        throw DataError("ShapeMismatch: matrix columns are not per-channel Both blocks");
    }
    if (subset == FeatureSet::Both) return both;
    const std::size_t channels = both.rows.cols / block;
    const std::size_t offset = subset == FeatureSet::Statistical ? 0 : kStatisticalFeatureCount;
    const std::size_t width = subset == FeatureSet::Statistical ? kStatisticalFeatureCount
                                                               : kSpectralFeatureCount;

    FeatureMatrix out;
    out.labels = both.labels;
    out.segment = both.segment;
    out.segment_ids = both.segment_ids;
    out.degenerate_windows = both.degenerate_windows;
    out.rows = Matrix(both.rows.rows, channels * width);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t i = 0; i < width; ++i) {
            out.columns.push_back(both.columns[ch * block + offset + i]);
        }
    }
    for (std::size_t r = 0; r < both.rows.rows; ++r) {
        const double* src = both.rows.row(r);
        double* dst = out.rows.row(r);
        for (std::size_t ch = 0; ch < channels; ++ch) {
            std::memcpy(dst + ch * width, src + ch * block + offset, width * sizeof(double));
        }
    }
    return out;
}

// ---- normalization ---------------------------------------------------------

FeatureNormStats fit_feature_norm(const FeatureMatrix& m, const std::vector<std::size_t>& training_rows) {
    if (training_rows.empty()) throw DataError("EmptyTrain: no training rows for feature norm");
    const std::size_t c = m.rows.cols;
    const double dn = static_cast<double>(training_rows.size());

    FeatureNormStats st;
    st.mean.assign(c, 0.0);
    st.std_dev.assign(c, 0.0);
    st.constant.assign(c, 0);
    std::vector<double> lo(c), hi(c);
    bool first = true;
    for (std::size_t r : training_rows) {
        if (r >= m.rows.rows) throw DataError("ShapeMismatch: training row index out of range");
        const double* row = m.rows.row(r);
        for (std::size_t j = 0; j < c; ++j) {
            st.mean[j] += row[j];
            if (first) {
                lo[j] = hi[j] = row[j];
            } else {
                lo[j] = std::min(lo[j], row[j]);
                hi[j] = std::max(hi[j], row[j]);
            }
        }
        first = false;
    }
    for (std::size_t j = 0; j < c; ++j) st.mean[j] /= dn;
    for (std::size_t r : training_rows) {
        const double* row = m.rows.row(r);
        for (std::size_t j = 0; j < c; ++j) {
            const double d = row[j] - st.mean[j];
            st.std_dev[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < c; ++j) {
        if (lo[j] == hi[j]) {
            st.constant[j] = 1;
            st.std_dev[j] = 1.0;
        } else {
            st.std_dev[j] = std::sqrt(st.std_dev[j] / dn);
        }
    }
    return st;
}

FeatureNormStats fit_feature_norm(const FeatureMatrix& m) {
    std::vector<std::size_t> rows(m.rows.rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return fit_feature_norm(m, rows);
}

FeatureMatrix apply_feature_norm(FeatureMatrix m, const FeatureNormStats& stats) {
    if (stats.mean.size() != m.rows.cols) {
        throw DataError("ShapeMismatch: norm stats cover " + std::to_string(stats.mean.size()) +
                        " columns, matrix has " + std::to_string(m.rows.cols));
    }
    for (std::size_t r = 0; r < m.rows.rows; ++r) {
        double* row = m.rows.row(r);
        for (std::size_t j = 0; j < m.rows.cols; ++j) {
            row[j] = stats.constant[j] ? 0.0 : (row[j] - stats.mean[j]) / stats.std_dev[j];
        }
    }
    m.norm = stats;
    return m;
}

// ---- persistence -----------------------------------------------------------

namespace {

json norm_to_json(const FeatureNormStats& st) {
    json j;
    j["mean"] = st.mean;
    j["std"] = st.std_dev;
    j["constant"] = st.constant;
    return j;
}

FeatureNormStats norm_from_json(const json& j) {
    FeatureNormStats st;
    st.mean = j.at("mean").get<std::vector<double>>();
    st.std_dev = j.at("std").get<std::vector<double>>();
    st.constant = j.at("constant").get<std::vector<std::uint8_t>>();
    return st;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

void save_features(const FeatureMatrix& m, const std::string& path, const std::string& extra_json) {
    if (ends_with(path, ".f32")) {
        std::string out(m.rows.data.size() * 4, '\0');
        for (std::size_t i = 0; i < m.rows.data.size(); ++i) {
            const float f = static_cast<float>(m.rows.data[i]);
            std::memcpy(out.data() + 4 * i, &f, 4);
        }
        io::write_file(path, out);
    } else {
        std::string out;
        out.reserve(m.rows.data.size() * 8);
        for (std::size_t j = 0; j < m.columns.size(); ++j) {
            if (j) out += ',';
            out += m.columns[j];
        }
        out += '\n';
        for (std::size_t r = 0; r < m.rows.rows; ++r) {
            const double* row = m.rows.row(r);
            for (std::size_t j = 0; j < m.rows.cols; ++j) {
                if (j) out += ',';
                out += io::format_double(row[j]);
            }
            out += '\n';
        }
        io::write_file(path, out);
    }

    json meta;
    meta["columns"] = m.columns;
    json labels = json::array();
    for (Label l : m.labels) labels.push_back(label_name(l));
    meta["labels"] = std::move(labels);
    json segs = json::array();
    for (std::uint32_t s : m.segment) segs.push_back(m.segment_ids[s]);
    meta["segments"] = std::move(segs);
    meta["segment_ids"] = m.segment_ids;
    meta["degenerate_windows"] = m.degenerate_windows;
    if (!m.norm.empty()) meta["norm_stats"] = norm_to_json(m.norm);
    if (!extra_json.empty()) {
        json extra = json::parse(extra_json);
        for (auto& [k, v] : extra.items()) meta[k] = v;
    }
    io::write_file(path + ".meta.json", meta.dump(2) + "\n");
}

FeatureMatrix load_features(const std::string& path) {
    json meta;
    try {
        meta = json::parse(io::read_file(path + ".meta.json"));
    } catch (const json::exception& e) {
        throw DataError(std::string("ParseError: feature sidecar for ") + path + ": " + e.what());
    }

    FeatureMatrix m;
    try {
        m.columns = meta.at("columns").get<std::vector<std::string>>();
        for (const auto& l : meta.at("labels")) m.labels.push_back(parse_label(l.get<std::string>()));
        m.segment_ids = meta.at("segment_ids").get<std::vector<std::string>>();
        for (const auto& s : meta.at("segments")) {
            const std::string id = s.get<std::string>();
            const auto it = std::find(m.segment_ids.begin(), m.segment_ids.end(), id);
            if (it == m.segment_ids.end()) throw DataError("ParseError: unknown segment '" + id + "' in sidecar");
            m.segment.push_back(static_cast<std::uint32_t>(it - m.segment_ids.begin()));
        }
        m.degenerate_windows = meta.value("degenerate_windows", std::size_t{0});
        if (meta.contains("norm_stats")) m.norm = norm_from_json(meta.at("norm_stats"));
    } catch (const json::exception& e) {
        throw DataError(std::string("ParseError: feature sidecar for ") + path + ": " + e.what());
    }

    const std::size_t c = m.columns.size();
    if (c == 0) throw DataError("ParseError: feature sidecar declares no columns");
    if (ends_with(path, ".f32")) {
        const std::string content = io::read_file(path);
        if (content.size() % (4 * c) != 0) {
            throw DataError("ParseError: " + path + " size does not match " + std::to_string(c) +
                            " columns");
        }
        const std::size_t rows = content.size() / (4 * c);
        m.rows = Matrix(rows, c);
        for (std::size_t i = 0; i < rows * c; ++i) {
            float f;
            std::memcpy(&f, content.data() + 4 * i, 4);
            m.rows.data[i] = static_cast<double>(f);
        }
    } else {
        const std::string content = io::read_file(path);
        std::size_t pos = 0;
        auto next_line = [&](std::string_view& line) {
            if (pos >= content.size()) return false;
            std::size_t nl = content.find('\n', pos);
            if (nl == std::string::npos) nl = content.size();
            line = std::string_view(content).substr(pos, nl - pos);
            pos = nl + 1;
            return true;
        };
        std::string_view header;
        if (!next_line(header)) throw DataError("ParseError: empty feature CSV " + path);
        std::vector<double> values;
        std::string_view line;
        std::size_t rows = 0;
        while (next_line(line)) {
            line = io::trim(line);
            if (line.empty()) continue;
            auto cells = io::split(line, ',');
            if (cells.size() != c) {
                throw DataError("ParseError: feature row has " + std::to_string(cells.size()) +
                                " cells, expected " + std::to_string(c));
            }
            for (const auto& cell : cells) values.push_back(io::parse_double(io::trim(cell), "feature CSV"));
            ++rows;
        }
        m.rows = Matrix(rows, c);
        m.rows.data = std::move(values);
    }
    if (m.labels.size() != m.rows.rows || m.segment.size() != m.rows.rows) {
        throw DataError("ParseError: sidecar labels do not match row count of " + path);
    }
    return m;
}

} // namespace vibench
