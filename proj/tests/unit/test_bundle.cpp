#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "vibench/bundle.hpp"
#include "vibench/errors.hpp"
#include "vibench/io_util.hpp"
#include "vibench/rng.hpp"

using namespace vibench;
namespace fs = std::filesystem;

namespace {

Matrix random_blob(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(rows, cols);
    for (double& v : x.data) v = rng.normal(0.5, 1.0);
    return x;
}

} // namespace

TEST_CASE("model bundles round-trip with bit-exact scores") {
    const auto dir = fs::temp_directory_path() / "vibench_test_bundle";
    fs::create_directories(dir);

    const Matrix train = random_blob(120, 6, 31);
    const Matrix query = random_blob(40, 6, 32);

    DetectorSettings settings;
    settings.neural.epochs = 6; // keep the neural round trips fast

    const std::vector<ModelKind> kinds = {ModelKind::IForest, ModelKind::Knn,   ModelKind::Cblof,
                                          ModelKind::Copod,   ModelKind::AutoEnc,
                                          ModelKind::DeepSvdd};
    for (ModelKind kind : kinds) {
        CAPTURE(model_kind_name(kind));
        AnomalyModel model = train_model(kind, train, settings, 17);
        const std::vector<double> want = score(model, query);

        const std::string path = (dir / (std::string(model_kind_name(kind)) + ".model")).string();
        save_model(model, path, "norm-ref.json");
        LoadedModel loaded = load_model(path);

        CHECK(loaded.model.kind == kind);
        CHECK(loaded.model.train_dim == 6);
        CHECK(loaded.model.seed == 17);
        CHECK(loaded.norm_stats_ref == "norm-ref.json");

        const std::vector<double> got = score(loaded.model, query);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);

        // a second save of the loaded model reproduces the file byte for byte
        const std::string path2 = path + ".resave";
        save_model(loaded.model, path2, "norm-ref.json");
        CHECK(ioutil::read_file(path) == ioutil::read_file(path2));
    }

    fs::remove_all(dir);
}

TEST_CASE("training-loss trace stays out of the container") {
    const auto dir = fs::temp_directory_path() / "vibench_test_bundle_loss";
    fs::create_directories(dir);

    DetectorSettings settings;
    settings.neural.epochs = 4;
    AnomalyModel model = train_model(ModelKind::AutoEnc, random_blob(64, 4, 8), settings, 5);
    REQUIRE(std::get<AutoEncModel>(model.payload).epoch_loss.size() == 4);

    const std::string path = (dir / "ae.model").string();
    save_model(model, path);
    LoadedModel loaded = load_model(path);
    CHECK(std::get<AutoEncModel>(loaded.model.payload).epoch_loss.empty());
    CHECK(loaded.norm_stats_ref.empty());

    fs::remove_all(dir);
}

TEST_CASE("corrupt containers are rejected") {
    const auto dir = fs::temp_directory_path() / "vibench_test_bundle_bad";
    fs::create_directories(dir);
    const std::string path = (dir / "m.model").string();

    AnomalyModel model = train_model(ModelKind::Knn, random_blob(30, 3, 2), {}, 1);
    save_model(model, path);
    const std::string good = ioutil::read_file(path);

    auto expect_parse_error = [&](std::string bytes) {
        ioutil::write_file(path, bytes);
        CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("ParseError"), DataError);
    };

    // wrong magic
    {
        std::string bad = good;
        bad[0] = 'X';
        expect_parse_error(bad);
    }
    // truncated blob
    expect_parse_error(good.substr(0, good.size() - 8));
    // trailing junk
    expect_parse_error(good + std::string(8, '\0'));
    // header not JSON
    {
        std::string bad = good;
        bad[13] = '#';
        expect_parse_error(bad);
    }
    // future version
    {
        std::string bad = good;
        const auto at = bad.find("\"version\":1");
        REQUIRE(at != std::string::npos);
        bad.replace(at, 11, "\"version\":9");
        expect_parse_error(bad);
    }
    expect_parse_error("");

    fs::remove_all(dir);
}
