#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "motionforge/rotation.hpp"

using namespace motionforge;

namespace {

// exp of the skew matrix by truncated power series
Eigen::Matrix3d series_exp(const Eigen::Vector3d& w) {
    Eigen::Matrix3d K;
    K << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
    Eigen::Matrix3d term = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d sum = term;
    for (int n = 1; n < 40; ++n) {
        term = term * K / n;
        sum += term;
    }
    return sum;
}

}  // namespace

TEST_CASE("rodrigues matches the matrix exponential") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector3d w(u(gen), u(gen), u(gen));
        CHECK((rodrigues(w) - series_exp(w)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("tiny angles take the series branch and stay orthonormal") {
    const Eigen::Vector3d w(3e-9, -1e-9, 2e-9);
    const auto R = rodrigues(w);
    CHECK((R - series_exp(w)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(orthonormality_error(R) < 1e-15);
    CHECK(rodrigues(Eigen::Vector3d::Zero()) == Eigen::Matrix3d::Identity());
}

TEST_CASE("quarter turn about z") {
    const auto R = rodrigues(Eigen::Vector3d(0, 0, M_PI / 2));
    const Eigen::Vector3d x = R * Eigen::Vector3d::UnitX();
    CHECK(x.x() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(x.y() == doctest::Approx(1.0));
}

TEST_CASE("axis-angle round trip") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector3d w(u(gen), u(gen), u(gen));
        CHECK((rotation_to_axis_angle(rodrigues(w)) - w).norm() < 1e-10);
    }
}

TEST_CASE("skew is the cross-product matrix") {
    const Eigen::Vector3d a(1, 2, 3), b(-4, 0.5, 2);
    CHECK((skew(a) * b - a.cross(b)).norm() < 1e-15);
}
