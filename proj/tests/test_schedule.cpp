#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "motionforge/error.hpp"
#include "oracles.hpp"
#include "motionforge/schedule.hpp"

using namespace motionforge;

namespace {

using oracles::kChi2Crit39;
using oracles::kTruncMean;
using oracles::kTruncStd;
using oracles::simpson;
using oracles::simpson_moment;

double bisect_quantile(double p) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("normal quantile accuracy") {
    double worst = 0.0;
    for (double p = 1e-12; p < 1.0; p = p < 1e-3 ? p * 3.0 : p + 1e-3) {
        worst = std::max(worst, std::abs(normal_quantile(p) - bisect_quantile(p)));
    }
    for (double p : {1e-300, 1e-100, 1e-20})
        worst = std::max(worst, std::abs(normal_quantile(p) - bisect_quantile(p)) / std::max(1.0, std::abs(bisect_quantile(p))));
    CHECK(worst <= 1e-9);
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(std::isinf(normal_quantile(0.0)));
    CHECK(std::isnan(normal_quantile(1.5)));
}

TEST_CASE("closed-form moments for the default sampler") {
    const TimestepSamplerConfig cfg;
    CHECK(cfg.truncated_mean() == doctest::Approx(kTruncMean).epsilon(1e-12));
    CHECK(std::sqrt(cfg.truncated_variance()) == doctest::Approx(kTruncStd).epsilon(1e-10));
    const double z = simpson(0.6, 1.0, 0.9, 0.2);
    CHECK(simpson_moment(0.6, 1.0, 0.9, 0.2) / z == doctest::Approx(kTruncMean).epsilon(1e-10));
}

TEST_CASE("rejection sampling agrees with the closed-form mean") {
    std::mt19937_64 gen(99);
    std::normal_distribution<double> nd(0.9, 0.2);
    double sum = 0.0;
    int n = 0;
    while (n < 400000) {
        const double t = nd(gen);
        if (t < 0.6 || t > 1.0) continue;
        sum += t;
        ++n;
    }
    CHECK(std::abs(sum / n - kTruncMean) < 5.0 * kTruncStd / std::sqrt(n));
}

TEST_CASE("default sampler support, mean and histogram over 1e6 draws") {
    const TimestepSamplerConfig cfg;
    Rng rng(20240601);
    constexpr int kDraws = 1000000;
    constexpr int kBins = 40;
    std::vector<long> bins(kBins, 0);
    double sum = 0.0, mn = 1.0, mx = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        const double t = sample_timestep(cfg, rng);
        sum += t;
        mn = std::min(mn, t);
        mx = std::max(mx, t);
        bins[std::min(kBins - 1, static_cast<int>((t - 0.6) / 0.4 * kBins))]++;
    }
    CHECK(mn >= 0.6);
    CHECK(mx <= 1.0);
    CHECK(std::abs(sum / kDraws - kTruncMean) <= 1e-3);
    const double z = simpson(0.6, 1.0, 0.9, 0.2);
    double chi2 = 0.0;
    for (int b = 0; b < kBins; ++b) {
        const double p = simpson(0.6 + 0.4 * b / kBins, 0.6 + 0.4 * (b + 1) / kBins, 0.9, 0.2, 200) / z;
        const double e = p * kDraws;
        chi2 += (bins[b] - e) * (bins[b] - e) / e;
    }
    CHECK(chi2 < kChi2Crit39);
}

TEST_CASE("degenerate concentration") {
    TimestepSamplerConfig cfg;
    cfg.stddev = 1e-9;
    Rng rng(5);
    for (int i = 0; i < 100000; ++i) REQUIRE(std::abs(sample_timestep(cfg, rng) - 0.9) <= 1e-6);
}

TEST_CASE("random configurations track their closed-form moments") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        TimestepSamplerConfig cfg;
        cfg.lo = 0.8 * u(gen);
        cfg.hi = cfg.lo + 0.05 + (1.0 - cfg.lo - 0.05) * u(gen);
        cfg.mean = -0.5 + 2.0 * u(gen);
        cfg.stddev = 0.02 + 0.5 * u(gen);
        CAPTURE(cfg.mean);
        CAPTURE(cfg.stddev);
        CAPTURE(cfg.lo);
        CAPTURE(cfg.hi);
        const double zn = simpson(cfg.lo, cfg.hi, cfg.mean, cfg.stddev);
        if (zn < 1e-200) continue;
        const double m_oracle = simpson_moment(cfg.lo, cfg.hi, cfg.mean, cfg.stddev) / zn;
        CHECK(cfg.truncated_mean() == doctest::Approx(m_oracle).epsilon(1e-7));

        Rng rng(1000 + trial);
        constexpr int n = 100000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = sample_timestep(cfg, rng);
            REQUIRE(t >= cfg.lo);
            REQUIRE(t <= cfg.hi);
            s += t;
            s2 += t * t;
        }
        const double mean = s / n;
        const double var = s2 / n - mean * mean;
        CHECK(std::abs(mean - cfg.truncated_mean()) < 5.0 * std::sqrt(cfg.truncated_variance() / n) + 1e-12);
        CHECK(var == doctest::Approx(cfg.truncated_variance()).epsilon(0.05));
    }
}

TEST_CASE("sampler config validation") {
    TimestepSamplerConfig cfg;
    cfg.lo = 0.7;
    cfg.hi = 0.7;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.stddev = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.hi = 1.1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    CHECK_NOTHROW(TimestepSamplerConfig{}.validate());
}

TEST_CASE("conditioning gate on the 1e-3 grid") {
    const TimestepSamplerConfig cfg;
    for (int i = 0; i <= 1000; ++i) {
        const double t = i / 1000.0;
        CHECK(conditioning_active(t, cfg) == (i >= 600));
    }
    CHECK(conditioning_active(0.8, cfg));
    CHECK(!conditioning_active(0.5, cfg));
    CHECK(conditioning_active(0.6, cfg));
    CHECK(conditioning_active(1.0, cfg));
    CHECK(!conditioning_active(std::nextafter(0.6, 0.0), cfg));
    CHECK_THROWS_AS(conditioning_active(1.0001, cfg), Error);
    CHECK_THROWS_AS(conditioning_active(-0.1, cfg), Error);
}

TEST_CASE("noise schedules") {
    for (auto preset : {NoisePreset::cosine, NoisePreset::linear}) {
        NoiseSchedule s{preset};
        CHECK(s.alpha_bar(0.0) == 1.0);
        CHECK(s.alpha_bar(1.0) < 1e-4);
        double prev = 2.0;
        for (int i = 0; i <= 1000; ++i) {
            const double a = s.alpha_bar(i / 1000.0);
            CHECK(a < prev);
            CHECK(a >= 1e-8);
            prev = a;
        }
        CHECK(preset_from_name(preset_name(preset)) == preset);
    }
    CHECK(NoiseSchedule{}.alpha_bar(0.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS(preset_from_name("sigmoid"), Error);
}

TEST_CASE("forward noise at t = 0 is exact") {
    Matrix x0(3, 4);
    x0.setRandom();
    Rng rng(3);
    CHECK(forward_noise(x0, 0.0, {}, rng) == x0);
}

TEST_CASE("forward noise at t = 1 has unit variance") {
    Rng rng(4);
    const Matrix x0 = Matrix::Zero(1, 3);
    Eigen::Array3d s = Eigen::Array3d::Zero(), s2 = Eigen::Array3d::Zero();
    constexpr int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const Eigen::Array3d x = forward_noise(x0, 1.0, {}, rng).row(0).transpose().array();
        s += x;
        s2 += x * x;
    }
    const Eigen::Array3d mean = s / n;
    const Eigen::Array3d var = s2 / n - mean * mean;
    for (int c = 0; c < 3; ++c) CHECK(std::abs(var(c) - 1.0) < 0.01);
}

TEST_CASE("forward noise mean is sqrt(alpha_bar) x0") {
    Rng rng(5);
    Matrix x0(1, 2);
    x0 << 2.0, -3.0;
    const NoiseSchedule sched;
    const double t = 0.4, a = sched.alpha_bar(t);
    constexpr int n = 200000;
    Eigen::Array2d s = Eigen::Array2d::Zero();
    for (int i = 0; i < n; ++i) s += forward_noise(x0, t, sched, rng).row(0).transpose().array();
    const double band = 3.0 * std::sqrt((1.0 - a) / n);
    CHECK(std::abs(s(0) / n - std::sqrt(a) * 2.0) < band);
    CHECK(std::abs(s(1) / n + std::sqrt(a) * 3.0) < band);
}

TEST_CASE("forward noise is seeded") {
    Matrix x0 = Matrix::Ones(4, 5);
    Rng a(11), b(11);
    CHECK(forward_noise(x0, 0.7, {}, a) == forward_noise(x0, 0.7, {}, b));
    Matrix bad = x0;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(forward_noise(bad, 0.5, {}, a), Error);
}

TEST_CASE("derived seeds differ per stream") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(42, s));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform_open();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}
