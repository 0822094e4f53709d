#include "fput/experiments.hpp"
#include "fput/lattice.hpp"

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

PhaseState random_state(std::size_t n, std::uint64_t seed, double scale = 0.3)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    PhaseState s{Eigen::VectorXd(n), Eigen::VectorXd(n), 0.0};
    for (std::size_t j = 0; j < n; ++j) {
        s.x[j] = u(gen);
        s.p[j] = u(gen);
    }
    return s;
}

} // namespace

TEST_CASE("mode-1 start energy has a closed form")
{
    // Harmonic part (N+1) sin^2(pi/(2(N+1))); the cubic bond terms cancel by
    // symmetry of the sine profile.
    for (std::size_t n : {4, 8, 16, 32, 64, 101}) {
        const auto m = homogeneous(n);
        const double h = std::numbers::pi / (2.0 * static_cast<double>(n + 1));
        const double expected = static_cast<double>(n + 1) * std::sin(h) * std::sin(h);
        CHECK_THAT(total_energy(initial_condition_mode1(n), m), WithinRel(expected, 1e-13));
    }
}

TEST_CASE("mode-1 start energies match the quoted table")
{
    // Half a unit in the last quoted decimal; N=32 is quoted with three digits.
    struct Row {
        std::size_t n;
        double e;
        int decimals;
    };
    const Row table[] = {{4, 0.4775, 4}, {8, 0.2714, 4}, {16, 0.1447, 4}, {32, 0.0747, 4}, {64, 0.03795, 5}};
    for (auto [n, e, decimals] : table) {
        const double got = total_energy(initial_condition_mode1(n), homogeneous(n));
        CHECK(std::abs(got - e) <= 0.5 * std::pow(10.0, -decimals));
    }
}

TEST_CASE("accelerations are minus the energy gradient")
{
    const std::size_t n = 9;
    const auto m = homogeneous(n, 0.7);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = random_state(n, seed);
        const auto acc = rhs_homogeneous(s, m);
        for (std::size_t j = 0; j < n; ++j) {
            const double h = 1e-6;
            PhaseState a = s, b = s;
            a.x[j] += h;
            b.x[j] -= h;
            const double grad = (total_energy(a, m) - total_energy(b, m)) / (2 * h);
            CHECK_THAT(acc[j], WithinAbs(-grad, 1e-8));
        }
    }
}

TEST_CASE("two-particle disordered force written out by hand")
{
    const double alpha = 0.4, v1 = 1.05, v2 = 0.97, a = 0.3, b = -0.2;
    DisorderProfile d{{1.0, v1, v2, 1.0}, 10.0, 0};
    const auto m = build_lattice(2, alpha, d, Variant::DisorderedNonlinear);
    PhaseState s{Eigen::Vector2d(a, b), Eigen::Vector2d::Zero(), 0.0};
    const auto acc = rhs_disordered(s, m);

    const double y01 = v1 * a;           // wall to particle 1
    const double y12 = v2 * b - v1 * a;  // particle 1 to 2
    const double y23 = -v2 * b;          // particle 2 to wall
    const double f1 = ((b - a) + alpha * y12 * y12) - (a + alpha * y01 * y01);
    const double f2 = (-b + alpha * y23 * y23) - ((b - a) + alpha * y12 * y12);
    CHECK_THAT(acc[0], WithinAbs(f1, 1e-15));
    CHECK_THAT(acc[1], WithinAbs(f2, 1e-15));
}

TEST_CASE("unit disorder reproduces the homogeneous force bit for bit")
{
    const std::size_t n = 16;
    const auto hom = homogeneous(n);
    const auto dis = build_lattice(n, 0.25, DisorderProfile::unit(n), Variant::DisorderedNonlinear);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = random_state(n, seed);
        CHECK(rhs_homogeneous(s, hom) == rhs_disordered(s, dis));
    }
}

TEST_CASE("flow Jacobian matches central differences")
{
    const std::size_t n = 8;
    const auto m = build_lattice(n, 0.25, sample_disorder(15.0, n, 42), Variant::DisorderedNonlinear);
    auto flow = [&](const PhaseState& s) {
        Eigen::VectorXd f(2 * n);
        f.head(n) = s.p;
        f.tail(n) = rhs_disordered(s, m);
        return f;
    };
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto s = random_state(n, 1000 + seed);
        const Eigen::MatrixXd jac = jacobian_rhs(s, m);
        const auto z = s.stacked();
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            const double h = 1e-6;
            Eigen::VectorXd zp = z, zm = z;
            zp[k] += h;
            zm[k] -= h;
            const Eigen::VectorXd col
                = (flow(PhaseState::from_stacked(zp, 0)) - flow(PhaseState::from_stacked(zm, 0))) / (2 * h);
            worst = std::max(worst, (col - jac.col(k)).cwiseAbs().maxCoeff());
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("model construction validates its input")
{
    CHECK_THROWS_AS(build_lattice(0, 0.25, DisorderProfile::unit(0), Variant::Homogeneous), std::invalid_argument);
    CHECK_THROWS_AS(homogeneous(4, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(homogeneous(4, std::nan("")), std::invalid_argument);

    DisorderProfile short_profile{{1.0, 1.0, 1.0}, 0.0, 0};
    CHECK_THROWS_AS(build_lattice(4, 0.25, short_profile, Variant::DisorderedNonlinear), std::invalid_argument);

    DisorderProfile outside{{1.0, 1.2, 1.0}, 10.0, 0};
    CHECK_THROWS_AS(build_lattice(1, 0.25, outside, Variant::DisorderedNonlinear), std::invalid_argument);

    DisorderProfile wall{{1.05, 1.0, 1.0}, 10.0, 0};
    CHECK_THROWS_AS(build_lattice(1, 0.25, wall, Variant::DisorderedNonlinear), std::invalid_argument);

    const auto dis = build_lattice(3, 0.25, sample_disorder(5.0, 3, 1), Variant::DisorderedNonlinear);
    CHECK_THROWS_AS(total_energy(initial_condition_mode1(3), dis), std::invalid_argument);
    CHECK_THROWS_AS(rhs_homogeneous(initial_condition_mode1(3), dis), std::invalid_argument);
    CHECK_THROWS_AS(rhs_disordered(initial_condition_mode1(4), dis), std::invalid_argument);
}

TEST_CASE("homogeneous models ignore the profile they are given")
{
    const auto m = build_lattice(4, 0.25, sample_disorder(10.0, 4, 3), Variant::Homogeneous);
    for (double v : m.disorder().values)
        CHECK(v == 1.0);
}

TEST_CASE("escape test")
{
    Eigen::VectorXd x(3);
    x << 0.1, -2.0, 0.3;
    CHECK_FALSE(escaped(x, 10.0));
    CHECK(escaped(x, 1.0));
    x[0] = std::numeric_limits<double>::infinity();
    CHECK(escaped(x, 1e300));
}
