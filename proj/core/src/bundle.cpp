#include "vibench/bundle.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include <json.hpp>

#include "vibench/errors.hpp"
#include "vibench/io_util.hpp"

namespace vibench {

using nlohmann::ordered_json;
using nlohmann::json;
namespace io = ioutil;

namespace {

constexpr char kMagic[8] = {'V', 'I', 'B', 'M', 'D', 'L', '0', '1'};

class BlobWriter {
public:
    void put(double v) {
        const std::size_t at = bytes_.size();
        bytes_.resize(at + 8);
        std::memcpy(bytes_.data() + at, &v, 8);
        ++count_;
    }
    void put_all(const std::vector<double>& v) {
        for (double x : v) put(x);
    }
    std::size_t count() const { return count_; }
    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
    std::size_t count_ = 0;
};

class BlobReader {
public:
    BlobReader(const char* data, std::size_t n_doubles, const std::string& path)
        : data_(data), left_(n_doubles), path_(path) {}

    double get() {
        if (left_ == 0)
            throw DataError("ParseError: model bundle " + path_ + ": parameter blob too short");
        double v;
        std::memcpy(&v, data_, 8);
        data_ += 8;
        --left_;
        return v;
    }
    std::vector<double> get_n(std::size_t n) {
        std::vector<double> out(n);
        for (double& v : out) v = get();
        return out;
    }
    /// Non-negative integer that must fit the declared limit.
    std::size_t get_index(std::size_t limit) {
        const double v = get();
        if (!(v >= 0.0) || v != std::floor(v) || v > static_cast<double>(limit))
            throw DataError("ParseError: model bundle " + path_ + ": corrupt structural field");
        return static_cast<std::size_t>(v);
    }
    std::size_t left() const { return left_; }

private:
    const char* data_;
    std::size_t left_;
    const std::string path_;
};

ordered_json train_config_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},        {"batch", c.batch}, {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},          {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

TrainConfig train_config_from(const json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch = j.at("batch").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    return c;
}

void write_net(const DenseNet& net, BlobWriter& blob) {
    for (const DenseLayer& l : net.layers) {
        blob.put_all(l.weights);
        blob.put_all(l.biases);
    }
}

DenseNet read_net(const json& shape, BlobReader& blob, const std::string& path) {
    DenseNet net;
    net.widths = shape.at("widths").get<std::vector<std::size_t>>();
    net.has_bias = shape.at("has_bias").get<bool>();
    if (net.widths.size() < 2)
        throw DataError("ParseError: model bundle " + path + ": net needs at least two widths");
    for (std::size_t i = 0; i + 1 < net.widths.size(); ++i) {
        DenseLayer l;
        l.in = net.widths[i];
        l.out = net.widths[i + 1];
        l.weights = blob.get_n(l.in * l.out);
        if (net.has_bias) l.biases = blob.get_n(l.out);
        net.layers.push_back(std::move(l));
    }
    return net;
}

} // namespace

void save_model(const AnomalyModel& model, const std::string& path,
                const std::string& norm_stats_ref) {
    ordered_json header;
    header["format"] = "vibench-model";
    header["version"] = 1;
    header["kind"] = model_kind_name(model.kind);
    header["train_dim"] = model.train_dim;
    header["seed"] = model.seed;
    header["norm_stats"] = norm_stats_ref;

    ordered_json hyper = ordered_json::object();
    ordered_json shape = ordered_json::object();
    BlobWriter blob;

    switch (model.kind) {
    case ModelKind::IForest: {
        const auto& m = std::get<IForestModel>(model.payload);
        hyper["n_trees"] = m.params.n_trees;
        hyper["subsample"] = m.params.subsample;
        shape["subsample_used"] = m.subsample_used;
        std::vector<std::size_t> node_counts;
        for (const auto& tree : m.trees) node_counts.push_back(tree.size());
        shape["tree_nodes"] = node_counts;
        for (const auto& tree : m.trees)
            for (const IForestNode& n : tree) {
                blob.put(n.feature);
                blob.put(n.split);
                blob.put(n.left);
                blob.put(n.right);
                blob.put(n.size);
            }
        break;
    }
    case ModelKind::Knn: {
        const auto& m = std::get<KnnModel>(model.payload);
        hyper["k"] = m.params.k;
        shape["rows"] = m.train.rows;
        shape["cols"] = m.train.cols;
        blob.put_all(m.train.data);
        break;
    }
    case ModelKind::Cblof: {
        const auto& m = std::get<CblofModel>(model.payload);
        hyper["n_clusters"] = m.params.n_clusters;
        hyper["alpha"] = m.params.alpha;
        hyper["beta"] = m.params.beta;
        hyper["max_iters"] = m.params.max_iters;
        hyper["tol"] = m.params.tol;
        shape["clusters"] = m.centers.rows;
        shape["cols"] = m.centers.cols;
        shape["n_large"] = m.n_large;
        blob.put_all(m.centers.data);
        for (std::size_t s : m.sizes) blob.put(static_cast<double>(s));
        break;
    }
    case ModelKind::Copod: {
        const auto& m = std::get<CopodModel>(model.payload);
        shape["dims"] = m.sorted_cols.size();
        shape["rows"] = m.sorted_cols.empty() ? 0 : m.sorted_cols.front().size();
        for (const auto& col : m.sorted_cols) blob.put_all(col);
        for (std::uint8_t f : m.use_left_tail) blob.put(f);
        break;
    }
    case ModelKind::AutoEnc: {
        const auto& m = std::get<AutoEncModel>(model.payload);
        hyper = train_config_json(m.config);
        shape["widths"] = m.net.widths;
        shape["has_bias"] = m.net.has_bias;
        write_net(m.net, blob);
        break;
    }
    case ModelKind::DeepSvdd: {
        const auto& m = std::get<DeepSvddModel>(model.payload);
        hyper = train_config_json(m.config);
        shape["widths"] = m.net.widths;
        shape["has_bias"] = m.net.has_bias;
        write_net(m.net, blob);
        blob.put_all(m.center);
        break;
    }
    }

    header["hyperparameters"] = hyper;
    header["shape"] = shape;
    header["param_count"] = blob.count();

    const std::string head = header.dump();
    std::string out;
    out.reserve(12 + head.size() + blob.bytes().size());
    out.append(kMagic, sizeof(kMagic));
    const std::uint32_t hlen = static_cast<std::uint32_t>(head.size());
    char lenbuf[4];
    std::memcpy(lenbuf, &hlen, 4);
    out.append(lenbuf, 4);
    out += head;
    out += blob.bytes();
    io::write_file(path, out);
}

LoadedModel load_model(const std::string& path) {
    const std::string raw = io::read_file(path);
    auto fail = [&](const std::string& what) -> DataError {
        return DataError("ParseError: model bundle " + path + ": " + what);
    };
    if (raw.size() < 12 || std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0)
        throw fail("bad magic");
    std::uint32_t hlen = 0;
    std::memcpy(&hlen, raw.data() + 8, 4);
    if (raw.size() < 12 + static_cast<std::size_t>(hlen)) throw fail("truncated header");

    json header;
    try {
        header = json::parse(raw.substr(12, hlen));
    } catch (const json::exception& e) {
        throw fail(e.what());
    }

    LoadedModel out;
    try {
        if (header.at("format").get<std::string>() != "vibench-model") throw fail("wrong format");
        if (header.at("version").get<int>() != 1)
            throw fail("unsupported version " + header.at("version").dump());

        AnomalyModel& model = out.model;
        model.kind = parse_model_kind(header.at("kind").get<std::string>());
        model.train_dim = header.at("train_dim").get<std::size_t>();
        model.seed = header.at("seed").get<std::uint64_t>();
        out.norm_stats_ref = header.at("norm_stats").get<std::string>();

        const std::size_t declared = header.at("param_count").get<std::size_t>();
        const std::size_t body = raw.size() - 12 - hlen;
        if (body != declared * 8) throw fail("parameter blob size disagrees with header");
        BlobReader blob(raw.data() + 12 + hlen, declared, path);
        const json& hyper = header.at("hyperparameters");
        const json& shape = header.at("shape");

        switch (model.kind) {
        case ModelKind::IForest: {
            IForestModel m;
            m.params.n_trees = hyper.at("n_trees").get<std::size_t>();
            m.params.subsample = hyper.at("subsample").get<std::size_t>();
            m.subsample_used = shape.at("subsample_used").get<std::size_t>();
            for (std::size_t count : shape.at("tree_nodes").get<std::vector<std::size_t>>()) {
                std::vector<IForestNode> tree(count);
                for (IForestNode& n : tree) {
                    const double feature = blob.get();
                    if (feature != std::floor(feature) || feature < -1.0)
                        throw fail("corrupt tree node");
                    n.feature = static_cast<std::int32_t>(feature);
                    n.split = blob.get();
                    n.left = static_cast<std::uint32_t>(blob.get_index(count));
                    n.right = static_cast<std::uint32_t>(blob.get_index(count));
                    n.size = static_cast<std::uint32_t>(
                        blob.get_index(std::numeric_limits<std::uint32_t>::max()));
                }
                m.trees.push_back(std::move(tree));
            }
            model.payload = std::move(m);
            break;
        }
        case ModelKind::Knn: {
            KnnModel m;
            m.params.k = hyper.at("k").get<std::size_t>();
            m.train = Matrix(shape.at("rows").get<std::size_t>(),
                             shape.at("cols").get<std::size_t>());
            m.train.data = blob.get_n(m.train.data.size());
            model.payload = std::move(m);
            break;
        }
        case ModelKind::Cblof: {
            CblofModel m;
            m.params.n_clusters = hyper.at("n_clusters").get<std::size_t>();
            m.params.alpha = hyper.at("alpha").get<double>();
            m.params.beta = hyper.at("beta").get<double>();
            m.params.max_iters = hyper.at("max_iters").get<std::size_t>();
            m.params.tol = hyper.at("tol").get<double>();
            m.centers = Matrix(shape.at("clusters").get<std::size_t>(),
                               shape.at("cols").get<std::size_t>());
            m.n_large = shape.at("n_large").get<std::size_t>();
            m.centers.data = blob.get_n(m.centers.data.size());
            for (std::size_t i = 0; i < m.centers.rows; ++i)
                m.sizes.push_back(blob.get_index(std::numeric_limits<std::uint32_t>::max()));
            if (m.n_large > m.centers.rows) throw fail("corrupt cluster boundary");
            model.payload = std::move(m);
            break;
        }
        case ModelKind::Copod: {
            CopodModel m;
            const std::size_t dims = shape.at("dims").get<std::size_t>();
            const std::size_t rows = shape.at("rows").get<std::size_t>();
            for (std::size_t d = 0; d < dims; ++d) m.sorted_cols.push_back(blob.get_n(rows));
            for (std::size_t d = 0; d < dims; ++d)
                m.use_left_tail.push_back(static_cast<std::uint8_t>(blob.get_index(1)));
            model.payload = std::move(m);
            break;
        }
        case ModelKind::AutoEnc: {
            AutoEncModel m;
            m.config = train_config_from(hyper);
            m.net = read_net(shape, blob, path);
            model.payload = std::move(m);
            break;
        }
        case ModelKind::DeepSvdd: {
            DeepSvddModel m;
            m.config = train_config_from(hyper);
            m.net = read_net(shape, blob, path);
            m.center = blob.get_n(m.net.widths.back());
            model.payload = std::move(m);
            break;
        }
        }
        if (blob.left() != 0) throw fail("unused trailing parameters");
    } catch (const json::exception& e) {
        throw fail(e.what());
    }
    return out;
}

} // namespace vibench
