#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "vibench/fft.hpp"
#include "vibench/rng.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Naive O(N^2) DFT with a precomputed twiddle table. The table is indexed
/// by (k*n) mod N so every twiddle is computed from one exact angle.
std::vector<std::complex<double>> dft_reference(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> table(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ang = -2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
        table[i] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            acc += x[t] * table[(k * t) % n];
        }
        out[k] = acc;
    }
    return out;
}

void check_close(const std::vector<std::complex<double>>& got,
                 const std::vector<std::complex<double>>& want, double tol) {
    REQUIRE(got.size() == want.size());
    double scale = 1.0;
    for (const auto& v : want) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < got.size(); ++i) {
        CAPTURE(i);
        CHECK(std::abs(got[i] - want[i]) <= tol * scale);
    }
}

std::vector<std::complex<double>> random_signal(std::size_t n, std::uint64_t seed) {
    vibench::Rng rng(seed);
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    return x;
}

} // namespace

TEST_CASE("impulse transforms to a flat spectrum") {
    std::vector<std::complex<double>> x(16, {0.0, 0.0});
    x[0] = {1.0, 0.0};
    vibench::fft(x);
    for (const auto& v : x) {
        CHECK(std::abs(v - std::complex<double>(1.0, 0.0)) < 1e-12);
    }
}

TEST_CASE("pure cosine concentrates at its bin") {
    const std::size_t n = 64;
    const std::size_t bin = 5;
    std::vector<std::complex<double>> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = {std::cos(2.0 * kPi * static_cast<double>(bin * t) / static_cast<double>(n)), 0.0};
    }
    vibench::fft(x);
    CHECK(std::abs(x[bin]) == doctest::Approx(n / 2.0).epsilon(1e-10));
    CHECK(std::abs(x[n - bin]) == doctest::Approx(n / 2.0).epsilon(1e-10));
    for (std::size_t k = 0; k < n; ++k) {
        if (k == bin || k == n - bin) continue;
        CHECK(std::abs(x[k]) < 1e-9);
    }
}

TEST_CASE("matches the reference transform on power-of-two sizes") {
    for (std::size_t n : {1u, 2u, 4u, 8u, 64u, 256u, 1024u}) {
        auto x = random_signal(n, 1000 + n);
        auto want = dft_reference(x);
        vibench::fft(x);
        check_close(x, want, 1e-9);
    }
}

TEST_CASE("matches the reference transform on arbitrary sizes") {
    for (std::size_t n : {3u, 5u, 7u, 12u, 100u, 360u, 1000u, 4096u, 12000u}) {
        auto x = random_signal(n, 2000 + n);
        auto want = dft_reference(x);
        vibench::fft(x);
        check_close(x, want, 1e-8);
    }
}

TEST_CASE("inverse transform round-trips") {
    for (std::size_t n : {8u, 100u, 1000u}) {
        auto x = random_signal(n, 3000 + n);
        auto orig = x;
        vibench::fft(x);
        vibench::ifft(x);
        check_close(x, orig, 1e-10);
    }
}

TEST_CASE("one-sided real transform matches the full transform") {
    vibench::Rng rng(42);
    for (std::size_t n : {16u, 17u, 100u, 101u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = rng.normal();
        std::vector<std::complex<double>> full(n);
        for (std::size_t i = 0; i < n; ++i) full[i] = {x[i], 0.0};
        auto want = dft_reference(full);
        auto got = vibench::rfft_one_sided(x);
        REQUIRE(got.size() == n / 2 + 1);
        want.resize(n / 2 + 1);
        check_close(got, want, 1e-9);
    }
}
