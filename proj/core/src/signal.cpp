#include "vibench/signal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <utility>

#include <json.hpp>

#include "vibench/io_util.hpp"

static_assert(std::endian::native == std::endian::little,
              "f32 container assumes a little-endian host");

namespace vibench {

using nlohmann::json;
namespace io = ioutil;

const char* label_name(Label l) { return l == Label::Normal ? "normal" : "abnormal"; }

Label parse_label(const std::string& s) {
    if (s == "normal") return Label::Normal;
    if (s == "abnormal") return Label::Abnormal;
    throw DataError("ParseError: unknown label '" + s + "' (expected normal|abnormal)");
}

namespace {

void validate_segments(std::vector<Segment>& segments, std::int64_t t) {
    std::sort(segments.begin(), segments.end(),
              [](const Segment& a, const Segment& b) { return a.start_sample < b.start_sample; });
    std::set<std::string> ids;
    const Segment* prev = nullptr;
    for (const Segment& s : segments) {
        if (!ids.insert(s.id).second) {
            throw DataError("ParseError: duplicate segment id '" + s.id + "'");
        }
        if (s.start_sample < 0 || s.end_sample > t || s.start_sample >= s.end_sample) {
            throw DataError("SegmentOutOfRange: segment '" + s.id + "' spans [" +
                            std::to_string(s.start_sample) + ", " + std::to_string(s.end_sample) +
                            ") outside [0, " + std::to_string(t) + ")");
        }
        if (prev && s.start_sample < prev->end_sample) {
            throw DataError("OverlapViolation: segments '" + prev->id + "' and '" + s.id +
                            "' overlap");
        }
        prev = &s;
    }
}

struct ManifestData {
    double nu = 0.0;
    std::vector<std::string> channels;
    int impeller = -1;
    std::vector<Segment> segments;
};

ManifestData load_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw DataError(std::string("ParseError: manifest ") + path + ": " + e.what());
    }
    ManifestData m;
    try {
        m.nu = j.at("sampling_rate_hz").get<double>();
        for (const auto& c : j.at("channels")) m.channels.push_back(c.get<std::string>());
        m.impeller = j.at("impeller_channel").get<int>();
        for (const auto& js : j.at("segments")) {
            Segment s;
            s.id = js.at("id").get<std::string>();
            s.label = parse_label(js.at("label").get<std::string>());
            s.start_sample = js.at("start_sample").get<std::int64_t>();
            s.end_sample = js.at("end_sample").get<std::int64_t>();
            s.experiment = js.value("experiment", std::string());
            m.segments.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("ParseError: manifest ") + path + ": " + e.what());
    }
    if (m.nu <= 0.0) {
        throw DataError("RateMismatch: sampling_rate_hz must be positive, got " +
                        io::format_double(m.nu));
    }
    if (m.channels.empty()) throw DataError("ParseError: manifest declares no channels");
    if (m.impeller < 0 || m.impeller >= static_cast<int>(m.channels.size())) {
        throw DataError("MissingChannel: impeller_channel " + std::to_string(m.impeller) +
                        " out of range for " + std::to_string(m.channels.size()) + " channels");
    }
    return m;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Matrix load_csv_samples(const std::string& path, const std::vector<std::string>& channels) {
    const std::string content = io::read_file(path);
    const std::size_t c = channels.size();

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
    if (!next_line(header)) throw DataError("ParseError: empty CSV " + path);
    auto names = io::split(io::trim(header), ',');
    if (names.size() != c) {
        throw DataError("MissingChannel: CSV has " + std::to_string(names.size()) +
                        " columns, manifest declares " + std::to_string(c));
    }
    for (std::size_t i = 0; i < c; ++i) {
        if (io::trim(names[i]) != channels[i]) {
            throw DataError("MissingChannel: CSV column '" + std::string(io::trim(names[i])) +
                            "' does not match manifest channel '" + channels[i] + "'");
        }
    }

    std::vector<double> values;
    std::string_view line;
    std::size_t rows = 0;
    while (next_line(line)) {
        line = io::trim(line);
        if (line.empty()) continue;
        auto cells = io::split(line, ',');
        if (cells.size() != c) {
            throw DataError("ParseError: row " + std::to_string(rows + 1) + " of " + path +
                            " has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(c));
        }
        for (const auto& cell : cells) values.push_back(io::parse_double(io::trim(cell), "CSV"));
        ++rows;
    }
    Matrix m(rows, c);
    m.data = std::move(values);
    return m;
}

Matrix load_f32_samples(const std::string& path, std::size_t c) {
    const std::string content = io::read_file(path);
    if (content.size() % (4 * c) != 0) {
        throw DataError("ParseError: " + path + " holds " + std::to_string(content.size()) +
                        " bytes, not a multiple of 4*" + std::to_string(c));
    }
    const std::size_t t = content.size() / (4 * c);
    Matrix m(t, c);
    const auto* bytes = reinterpret_cast<const unsigned char*>(content.data());
    for (std::size_t i = 0; i < t * c; ++i) {
        float f;
        std::memcpy(&f, bytes + 4 * i, 4);
        m.data[i] = static_cast<double>(f);
    }
    return m;
}

} // namespace

LabeledSignal load_signal(const std::string& data_path, const std::string& manifest_path) {
    ManifestData mf = load_manifest(manifest_path);
    LabeledSignal sig;
    sig.sampling_rate_hz = mf.nu;
    sig.channel_names = std::move(mf.channels);
    sig.impeller_channel = mf.impeller;
    sig.samples = ends_with(data_path, ".f32")
                      ? load_f32_samples(data_path, sig.channel_names.size())
                      : load_csv_samples(data_path, sig.channel_names);
    if (sig.samples.rows == 0) throw DataError("ParseError: no samples in " + data_path);
    sig.segments = std::move(mf.segments);
    validate_segments(sig.segments, sig.length());
    return sig;
}

void save_signal_csv(const LabeledSignal& sig, const std::string& path) {
    std::string out;
    out.reserve(sig.samples.data.size() * 8);
    for (std::size_t i = 0; i < sig.channel_names.size(); ++i) {
        if (i) out += ',';
        out += sig.channel_names[i];
    }
    out += '\n';
    for (std::size_t r = 0; r < sig.samples.rows; ++r) {
        const double* row = sig.samples.row(r);
        for (std::size_t i = 0; i < sig.samples.cols; ++i) {
            if (i) out += ',';
            out += io::format_double(row[i]);
        }
        out += '\n';
    }
    io::write_file(path, out);
}

void save_signal_f32(const LabeledSignal& sig, const std::string& path) {
    std::string out(sig.samples.data.size() * 4, '\0');
    for (std::size_t i = 0; i < sig.samples.data.size(); ++i) {
        const float f = static_cast<float>(sig.samples.data[i]);
        std::memcpy(out.data() + 4 * i, &f, 4);
    }
    io::write_file(path, out);
}

void save_manifest(const LabeledSignal& sig, const std::string& path, const std::string& extra_json) {
    json j;
    j["sampling_rate_hz"] = sig.sampling_rate_hz;
    j["channels"] = sig.channel_names;
    j["impeller_channel"] = sig.impeller_channel;
    json segs = json::array();
    for (const Segment& s : sig.segments) {
        segs.push_back({{"id", s.id},
                        {"label", label_name(s.label)},
                        {"start_sample", s.start_sample},
                        {"end_sample", s.end_sample},
                        {"experiment", s.experiment}});
    }
    j["segments"] = std::move(segs);
    if (!extra_json.empty()) {
        json extra = json::parse(extra_json);
        for (auto& [k, v] : extra.items()) j[k] = v;
    }
    io::write_file(path, j.dump(2) + "\n");
}

// ---- standardization -----------------------------------------------------

ChannelStats fit_standardizer(const std::vector<const LabeledSignal*>& signals,
                              const std::vector<std::string>& training_segment_ids) {
    if (signals.empty()) throw DataError("EmptyTrain: no signals");
    if (training_segment_ids.empty()) throw DataError("EmptyTrain: no training segments");
    const std::size_t c = signals.front()->channels();
    for (const LabeledSignal* s : signals) {
        if (s->channels() != c) throw DataError("ShapeMismatch: signals disagree on channel count");
    }

    // locate every requested segment in exactly one signal
    std::vector<std::pair<const LabeledSignal*, const Segment*>> picked;
    for (const std::string& id : training_segment_ids) {
        const Segment* found = nullptr;
        const LabeledSignal* owner = nullptr;
        for (const LabeledSignal* s : signals) {
            for (const Segment& seg : s->segments) {
                if (seg.id == id) {
                    found = &seg;
                    owner = s;
                }
            }
        }
        if (!found) throw DataError("MissingSegment: training segment '" + id + "' not found");
        picked.emplace_back(owner, found);
    }

    ChannelStats stats;
    stats.mean.assign(c, 0.0);
    stats.std_dev.assign(c, 0.0);
    std::vector<double> lo(c, 0.0), hi(c, 0.0);
    bool first_sample = true;
    std::int64_t n = 0;
    for (auto [sig, seg] : picked) {
        for (std::int64_t t = seg->start_sample; t < seg->end_sample; ++t) {
            const double* row = sig->samples.row(static_cast<std::size_t>(t));
            for (std::size_t ch = 0; ch < c; ++ch) {
                stats.mean[ch] += row[ch];
                if (first_sample) {
                    lo[ch] = hi[ch] = row[ch];
                } else {
                    lo[ch] = std::min(lo[ch], row[ch]);
                    hi[ch] = std::max(hi[ch], row[ch]);
                }
            }
            first_sample = false;
            ++n;
        }
    }
    if (n == 0) throw DataError("EmptyTrain: training segments contain no samples");
    for (std::size_t ch = 0; ch < c; ++ch) stats.mean[ch] /= static_cast<double>(n);

    for (auto [sig, seg] : picked) {
        for (std::int64_t t = seg->start_sample; t < seg->end_sample; ++t) {
            const double* row = sig->samples.row(static_cast<std::size_t>(t));
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double d = row[ch] - stats.mean[ch];
                stats.std_dev[ch] += d * d;
            }
        }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
        if (lo[ch] == hi[ch]) {
            throw DataError("ConstantChannel: channel '" + signals.front()->channel_names[ch] +
                            "' is constant over the training segments");
        }
        stats.std_dev[ch] = std::sqrt(stats.std_dev[ch] / static_cast<double>(n));
    }
    return stats;
}

ChannelStats fit_standardizer(const LabeledSignal& sig,
                              const std::vector<std::string>& training_segment_ids) {
    return fit_standardizer(std::vector<const LabeledSignal*>{&sig}, training_segment_ids);
}

LabeledSignal apply_standardizer(const LabeledSignal& sig, const ChannelStats& stats) {
    const std::size_t c = sig.channels();
    if (stats.mean.size() != c || stats.std_dev.size() != c) {
        throw DataError("ShapeMismatch: stats cover " + std::to_string(stats.mean.size()) +
                        " channels, signal has " + std::to_string(c));
    }
    LabeledSignal out = sig;
    for (std::size_t r = 0; r < out.samples.rows; ++r) {
        double* row = out.samples.row(r);
        for (std::size_t ch = 0; ch < c; ++ch) row[ch] = (row[ch] - stats.mean[ch]) / stats.std_dev[ch];
    }
    return out;
}

// ---- window set accessors --------------------------------------------------

void WindowSet::extract_channel(std::size_t w, std::size_t channel_pos, double* dst) const {
    const WindowRef& ref = windows[w];
    const Matrix& m = *storages[ref.storage];
    const std::size_t col = channels[channel_pos];
    const double* base = m.data.data() + static_cast<std::size_t>(ref.start) * m.cols + col;
    for (std::int64_t i = 0; i < length; ++i) dst[i] = base[static_cast<std::size_t>(i) * m.cols];
}

void WindowSet::extract_window(std::size_t w, double* dst) const {
    const WindowRef& ref = windows[w];
    const Matrix& m = *storages[ref.storage];
    const double* base = m.data.data() + static_cast<std::size_t>(ref.start) * m.cols;
    for (std::int64_t i = 0; i < length; ++i) {
        const double* row = base + static_cast<std::size_t>(i) * m.cols;
        for (std::size_t ch = 0; ch < channels.size(); ++ch) *dst++ = row[channels[ch]];
    }
}

// ---- windowing -------------------------------------------------------------

std::int64_t WindowingPlan::window_length() const {
    return static_cast<std::int64_t>(std::llround(tau_s * nu_hz));
}

std::int64_t WindowingPlan::stride() const {
    return std::max<std::int64_t>(
        1, std::llround((1.0 - overlap) * static_cast<double>(window_length())));
}

void WindowingPlan::validate() const {
    if (nu_hz <= 0.0) throw ConfigError("DegeneratePlan: sampling rate must be positive");
    if (overlap < 0.0 || overlap >= 1.0) {
        throw ConfigError("DegeneratePlan: overlap must lie in [0, 1), got " +
                          io::format_double(overlap));
    }
    if (window_length() < 2) {
        throw ConfigError("DegeneratePlan: window length round(tau*nu) = " +
                          std::to_string(window_length()) + " is below 2");
    }
}

WindowSet segment_windows(const std::shared_ptr<const LabeledSignal>& sig,
                          const WindowingPlan& plan, const ChannelSelection& selection) {
    plan.validate();
    const std::int64_t n = plan.window_length();
    const std::int64_t stride = plan.stride();

    WindowSet ws;
    // aliasing pointer: keeps the whole signal alive, exposes only the matrix
    ws.storages.push_back(std::shared_ptr<const Matrix>(sig, &sig->samples));
    ws.length = n;
    ws.nu_hz = sig->sampling_rate_hz;
    ws.channel_names = sig->channel_names;
    ws.channels.resize(sig->channels());
    for (std::size_t i = 0; i < ws.channels.size(); ++i) ws.channels[i] = i;
    if (sig->impeller_channel >= 0 &&
        sig->impeller_channel < static_cast<int>(sig->channel_names.size())) {
        ws.impeller_name = sig->channel_names[static_cast<std::size_t>(sig->impeller_channel)];
    }

    for (const Segment& seg : sig->segments) {
        const std::int64_t len = seg.end_sample - seg.start_sample;
        if (len < n) continue;
        const auto seg_idx = static_cast<std::uint32_t>(ws.segment_ids.size());
        ws.segment_ids.push_back(seg.id);
        ws.segment_labels.push_back(seg.label);
        const std::int64_t count = (len - n) / stride + 1;
        for (std::int64_t j = 0; j < count; ++j) {
            ws.windows.push_back({0, seg.start_sample + j * stride, seg_idx});
        }
    }
    if (ws.windows.empty()) {
        throw DataError("WindowTooLong: no segment holds a full window of " + std::to_string(n) +
                        " samples");
    }
    if (selection.kind != ChannelSelection::Kind::All) return select_channels(ws, selection);
    return ws;
}

WindowSet segment_windows(const LabeledSignal& sig, const WindowingPlan& plan,
                          const ChannelSelection& selection) {
    return segment_windows(std::make_shared<const LabeledSignal>(sig), plan, selection);
}

WindowSet merge_window_sets(const std::vector<WindowSet>& parts) {
    if (parts.empty()) throw DataError("ShapeMismatch: no window sets to merge");
    WindowSet out = parts.front();
    for (std::size_t p = 1; p < parts.size(); ++p) {
        const WindowSet& ws = parts[p];
        if (ws.length != out.length || ws.nu_hz != out.nu_hz ||
            ws.channel_names != out.channel_names || ws.impeller_name != out.impeller_name ||
            ws.channels != out.channels) {
            throw DataError("ShapeMismatch: window sets disagree on geometry or channels");
        }
        const auto storage_base = static_cast<std::uint32_t>(out.storages.size());
        const auto segment_base = static_cast<std::uint32_t>(out.segment_ids.size());
        out.storages.insert(out.storages.end(), ws.storages.begin(), ws.storages.end());
        out.segment_ids.insert(out.segment_ids.end(), ws.segment_ids.begin(), ws.segment_ids.end());
        out.segment_labels.insert(out.segment_labels.end(), ws.segment_labels.begin(),
                                  ws.segment_labels.end());
        for (WindowSet::WindowRef ref : ws.windows) {
            ref.storage += storage_base;
            ref.segment += segment_base;
            out.windows.push_back(ref);
        }
    }
    return out;
}

WindowSet select_channels(const WindowSet& ws, const ChannelSelection& selection) {
    WindowSet out = ws;
    switch (selection.kind) {
        case ChannelSelection::Kind::All:
            return out;
        case ChannelSelection::Kind::Single: {
            if (selection.index < 0 || selection.index >= static_cast<int>(ws.width())) {
                throw ConfigError("BadSelection: channel index " + std::to_string(selection.index) +
                                  " out of range for " + std::to_string(ws.width()) + " channels");
            }
            const auto i = static_cast<std::size_t>(selection.index);
            out.channels = {ws.channels[i]};
            out.channel_names = {ws.channel_names[i]};
            if (out.channel_names[0] != ws.impeller_name) out.impeller_name.clear();
            return out;
        }
        case ChannelSelection::Kind::AboveOil: {
            if (ws.impeller_name.empty()) {
                throw ConfigError("BadSelection: above-oil selection needs an impeller channel");
            }
            out.channels.clear();
            out.channel_names.clear();
            for (std::size_t i = 0; i < ws.width(); ++i) {
                if (ws.channel_names[i] == ws.impeller_name) continue;
                out.channels.push_back(ws.channels[i]);
                out.channel_names.push_back(ws.channel_names[i]);
            }
            if (out.channels.size() == ws.width() || out.channels.empty()) {
                throw ConfigError("BadSelection: above-oil selection needs the impeller plus at "
                                  "least one other channel");
            }
            out.impeller_name.clear();
            return out;
        }
    }
    throw ConfigError("BadSelection: unknown selection kind");
}

// ---- gaussian subsampling --------------------------------------------------

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::int64_t i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

std::int64_t reflect_index(std::int64_t p, std::int64_t n) {
    if (n == 1) return 0;
    const std::int64_t period = 2 * n;
    p %= period;
    if (p < 0) p += period;
    return p < n ? p : period - 1 - p;
}

/// Filter x with the kernel (reflect padding) and keep every step-th output.
void filter_subsample(const double* x, std::int64_t n, const std::vector<double>& kernel,
                      std::int64_t step, double* out, std::int64_t out_len) {
    const auto radius = static_cast<std::int64_t>(kernel.size() / 2);
    for (std::int64_t j = 0; j < out_len; ++j) {
        const std::int64_t center = j * step;
        double acc = 0.0;
        for (std::int64_t i = -radius; i <= radius; ++i) {
            acc += kernel[static_cast<std::size_t>(i + radius)] * x[reflect_index(center + i, n)];
        }
        out[j] = acc;
    }
}

} // namespace

std::vector<double> gaussian_subsample(const std::vector<double>& x, const GaussianPlan& plan) {
    const auto n = static_cast<std::int64_t>(x.size());
    if (plan.step < 1) throw ConfigError("BadConfig: gaussian step must be at least 1");
    if (n < plan.step) {
        throw DataError("TooShort: " + std::to_string(n) + " samples cannot be subsampled with step " +
                        std::to_string(plan.step));
    }
    const std::vector<double> kernel = gaussian_kernel(plan.effective_sigma());
    std::vector<double> out(static_cast<std::size_t>(n / plan.step));
    filter_subsample(x.data(), n, kernel, plan.step, out.data(),
                     static_cast<std::int64_t>(out.size()));
    return out;
}

LabeledSignal gaussian_subsample(const LabeledSignal& sig, const GaussianPlan& plan) {
    const std::int64_t t = sig.length();
    if (plan.step < 1) throw ConfigError("BadConfig: gaussian step must be at least 1");
    if (t < plan.step) throw DataError("TooShort: signal shorter than the subsampling step");
    const std::vector<double> kernel = gaussian_kernel(plan.effective_sigma());
    const std::int64_t out_t = t / plan.step;
    const std::size_t c = sig.channels();

    LabeledSignal out;
    out.sampling_rate_hz = sig.sampling_rate_hz / static_cast<double>(plan.step);
    out.channel_names = sig.channel_names;
    out.impeller_channel = sig.impeller_channel;
    out.samples = Matrix(static_cast<std::size_t>(out_t), c);

    std::vector<double> col(static_cast<std::size_t>(t));
    std::vector<double> filtered(static_cast<std::size_t>(out_t));
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::int64_t i = 0; i < t; ++i) col[static_cast<std::size_t>(i)] = sig.samples.at(static_cast<std::size_t>(i), ch);
        filter_subsample(col.data(), t, kernel, plan.step, filtered.data(), out_t);
        for (std::int64_t i = 0; i < out_t; ++i) out.samples.at(static_cast<std::size_t>(i), ch) = filtered[static_cast<std::size_t>(i)];
    }

    // output sample j is taken at input index j*step; segment [s, e) maps to
    // output indices with s <= j*step < e
    for (const Segment& s : sig.segments) {
        Segment mapped = s;
        mapped.start_sample = (s.start_sample + plan.step - 1) / plan.step;
        mapped.end_sample = (s.end_sample + plan.step - 1) / plan.step;
        if (mapped.start_sample < mapped.end_sample && mapped.end_sample <= out_t) {
            out.segments.push_back(std::move(mapped));
        }
    }
    return out;
}

WindowSet gaussian_subsample(const WindowSet& ws, const GaussianPlan& plan) {
    if (plan.step < 1) throw ConfigError("BadConfig: gaussian step must be at least 1");
    if (ws.length < plan.step) {
        throw DataError("TooShort: window length " + std::to_string(ws.length) +
                        " is below the subsampling step " + std::to_string(plan.step));
    }
    const std::vector<double> kernel = gaussian_kernel(plan.effective_sigma());
    const std::int64_t out_n = ws.length / plan.step;
    const std::size_t c = ws.width();
    const std::size_t w_count = ws.size();

    auto storage = std::make_shared<Matrix>(w_count * static_cast<std::size_t>(out_n), c);
    std::vector<double> col(static_cast<std::size_t>(ws.length));
    std::vector<double> filtered(static_cast<std::size_t>(out_n));
    for (std::size_t w = 0; w < w_count; ++w) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            ws.extract_channel(w, ch, col.data());
            filter_subsample(col.data(), ws.length, kernel, plan.step, filtered.data(), out_n);
            double* base = storage->data.data() + w * static_cast<std::size_t>(out_n) * c + ch;
            for (std::int64_t i = 0; i < out_n; ++i) base[static_cast<std::size_t>(i) * c] = filtered[static_cast<std::size_t>(i)];
        }
    }

    WindowSet out;
    out.storages.push_back(std::move(storage));
    out.segment_ids = ws.segment_ids;
    out.segment_labels = ws.segment_labels;
    out.channel_names = ws.channel_names;
    out.impeller_name = ws.impeller_name;
    out.length = out_n;
    out.nu_hz = ws.nu_hz / static_cast<double>(plan.step);
    out.channels.resize(c);
    for (std::size_t i = 0; i < c; ++i) out.channels[i] = i;
    out.windows.reserve(w_count);
    for (std::size_t w = 0; w < w_count; ++w) {
        out.windows.push_back({0, static_cast<std::int64_t>(w) * out_n, ws.windows[w].segment});
    }
    return out;
}

} // namespace vibench
