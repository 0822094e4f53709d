#include "fput/normal_modes.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace fput;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LatticeModel homogeneous(std::size_t n, double alpha = 0.25)
{
    return build_lattice(n, alpha, DisorderProfile::unit(n), Variant::Homogeneous);
}

double mode_shape(std::size_t n, std::size_t j, std::size_t k)
{
    const double np1 = static_cast<double>(n + 1);
    return std::sqrt(2.0 / np1) * std::sin(static_cast<double>(j * k) * std::numbers::pi / np1);
}

} // namespace

TEST_CASE("transform is its own inverse")
{
    for (std::size_t n : {1, 2, 4, 8, 16, 64, 127}) {
        const auto b = mode_basis(n);
        const auto nn = static_cast<Eigen::Index>(n);
        const double err = (b.matrix() * b.matrix() - Eigen::MatrixXd::Identity(nn, nn)).cwiseAbs().maxCoeff();
        CHECK(err < 1e-12);
        CHECK((b.matrix() - b.matrix().transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("fast and dense transforms agree")
{
    const std::size_t n = 300;
    const auto b = mode_basis(n);
    std::mt19937_64 gen(9);
    std::normal_distribution<double> g;
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v)
        x = g(gen);
    CHECK((b.apply(v) - b.apply_dense(v)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((b.apply(b.apply(v)) - v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("frequencies")
{
    const auto b = mode_basis(64);
    CHECK_THAT(b.frequency(0), WithinRel(2.0 * std::sin(std::numbers::pi / 130.0), 1e-15));
    CHECK_THAT(b.frequency(0), WithinAbs(0.0483275, 1e-7));
    CHECK_THAT(b.frequency(1), WithinAbs(0.0966268, 1e-7));
    CHECK(b.frequency(1) - 2.0 * b.frequency(0) < 0.0);
}

TEST_CASE("matrix entries follow the sine formula")
{
    const std::size_t n = 10;
    const auto b = mode_basis(n);
    for (std::size_t j = 1; j <= n; ++j)
        for (std::size_t k = 1; k <= n; ++k)
            CHECK_THAT(b.matrix()(j - 1, k - 1), WithinAbs(mode_shape(n, j, k), 1e-15));
}

TEST_CASE("lowest-mode start is a pure mode-1 state")
{
    for (std::size_t n : {4, 16, 64}) {
        const auto b = mode_basis(n);
        const auto ms = to_modes(initial_condition_mode1(n), b);
        CHECK_THAT(ms.q[0], WithinRel(std::sqrt(0.5 * static_cast<double>(n + 1)), 1e-13));
        CHECK(ms.q.tail(ms.q.size() - 1).cwiseAbs().maxCoeff() < 1e-13);
        const auto back = from_modes(ms, b);
        CHECK((back.x - initial_condition_mode1(n).x).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("mode energies sum to the harmonic energy")
{
    const std::size_t n = 12;
    const auto b = mode_basis(n);
    const auto m = homogeneous(n, 0.0);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1, 1);
    PhaseState s{Eigen::VectorXd(12), Eigen::VectorXd(12), 0};
    for (Eigen::Index i = 0; i < 12; ++i) {
        s.x[i] = u(gen);
        s.p[i] = u(gen);
    }
    CHECK_THAT(mode_energies(to_modes(s, b), b).sum(), WithinRel(total_energy(s, m), 1e-12));
}

TEST_CASE("truncation to all modes equals the full force")
{
    const std::size_t n = 8;
    const auto b = mode_basis(n);
    const auto m = homogeneous(n);
    Eigen::VectorXd q = Eigen::VectorXd::LinSpaced(8, -0.5, 0.6);
    Eigen::VectorXd acc(8);
    accelerations(m, b.apply(q), acc);
    CHECK((truncated_mode_rhs(q, b, m) - b.apply(acc)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(truncated_mode_rhs(Eigen::VectorXd(9), b, m), std::invalid_argument);
    CHECK_THROWS_AS(truncated_mode_rhs(Eigen::VectorXd(0), b, m), std::invalid_argument);
}

TEST_CASE("quadratic coefficients against a direct projection")
{
    // Mode-k nonlinear force for x = Q1 e1 + Q2 e2 is
    // alpha sum_j A_kj [(Q1 d1_j + Q2 d2_j)^2 - (Q1 d1_{j-1} + Q2 d2_{j-1})^2],
    // with d the bond differences of the mode shapes.
    const std::size_t n = 64;
    const double alpha = 0.25;
    const auto c = extract_quadratic_coefficients(homogeneous(n, alpha), mode_basis(n));

    auto bond = [&](std::size_t mode, std::size_t j) {  // x_{j+1} - x_j, j = 0..n
        const double r = j + 1 <= n ? mode_shape(n, j + 1, mode) : 0.0;
        const double l = j >= 1 ? mode_shape(n, j, mode) : 0.0;
        return r - l;
    };
    double a3 = 0.0, b1 = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
        const double cross = 2.0 * (bond(1, j) * bond(2, j) - bond(1, j - 1) * bond(2, j - 1));
        const double sq1 = bond(1, j) * bond(1, j) - bond(1, j - 1) * bond(1, j - 1);
        a3 += alpha * mode_shape(n, j, 1) * cross;
        b1 += alpha * mode_shape(n, j, 2) * sq1;
    }
    const double w1 = 2.0 * std::sin(std::numbers::pi / 130.0);
    const double w2 = 2.0 * std::sin(2.0 * std::numbers::pi / 130.0);
    const double eps = w2 - 2.0 * w1;
    CHECK_THAT(c.epsilon, WithinRel(eps, 1e-10));
    CHECK_THAT(c.a3, WithinRel(a3 / eps, 1e-8));
    CHECK_THAT(c.b1, WithinRel(b1 / eps, 1e-8));
    CHECK_THAT(c.a_tilde, WithinRel(a3 / eps / (2 * w1), 1e-8));
    CHECK_THAT(c.b_tilde, WithinRel(b1 / eps / (2 * w2), 1e-8));

    CHECK_THAT(c.a_tilde, WithinAbs(3.63, 0.02));
    CHECK_THAT(c.b_tilde, WithinAbs(0.91, 0.01));
}

TEST_CASE("coefficients scale linearly with alpha")
{
    const auto b = mode_basis(32);
    const auto c1 = extract_quadratic_coefficients(homogeneous(32, 0.25), b);
    const auto c2 = extract_quadratic_coefficients(homogeneous(32, 0.5), b);
    CHECK_THAT(c2.a_tilde, WithinRel(2 * c1.a_tilde, 1e-10));
    CHECK_THAT(c2.b_tilde, WithinRel(2 * c1.b_tilde, 1e-10));
}

TEST_CASE("quadratic model reproduces the truncated force exactly")
{
    const std::size_t n = 16;
    const auto b = mode_basis(n);
    const auto m = homogeneous(n);
    const auto c = extract_quadratic_coefficients(m, b);
    for (auto [q1, q2] : {std::pair{0.3, -0.7}, {1.5, 0.2}, {-2.0, 1.1}}) {
        const Eigen::VectorXd acc = truncated_mode_rhs(Eigen::Vector2d(q1, q2), b, m);
        const auto [n1, n2] = c.nonlinear(q1, q2);
        CHECK_THAT(acc[0], WithinAbs(-c.omega1 * c.omega1 * q1 + n1, 1e-12));
        CHECK_THAT(acc[1], WithinAbs(-c.omega2 * c.omega2 * q2 + n2, 1e-12));
    }
}

TEST_CASE("dimension checks")
{
    const auto b = mode_basis(4);
    CHECK_THROWS_AS(b.apply(Eigen::VectorXd(5)), std::invalid_argument);
    CHECK_THROWS_AS(mode_basis(0), std::invalid_argument);
    CHECK_THROWS_AS(extract_quadratic_coefficients(homogeneous(1), mode_basis(1)), std::invalid_argument);
    CHECK_THROWS_AS(extract_quadratic_coefficients(homogeneous(5), b), std::invalid_argument);
}
