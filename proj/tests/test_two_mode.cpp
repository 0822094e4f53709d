#include "fput/integrators.hpp"
#include "fput/two_mode.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <tuple>
#include <numbers>

using namespace fput;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kR1Sq = 65.0 / 8.0;  // N = 64 start

// Centred-difference Jacobian of the reduced field at (delta, theta).
Eigen::Matrix2d reduced_jacobian(double a, double b, double c, double delta, double theta)
{
    auto f = [&](double d, double t) {
        const auto [dd, dt] = reduced_rhs(ReducedState{d, t, c, a, b});
        return Eigen::Vector2d(dd, dt);
    };
    const double h = 1e-5;
    Eigen::Matrix2d j;
    j.col(0) = (f(delta + h, theta) - f(delta - h, theta)) / (2 * h);
    j.col(1) = (f(delta, theta + h) - f(delta, theta - h)) / (2 * h);
    return j;
}

} // namespace

TEST_CASE("homogeneous equilibria")
{
    const double c = initial_constant(3.63, 0.91, kR1Sq);
    const auto rep = equilibria(3.63, 0.91, c);
    REQUIRE(rep.points.size() == 2);
    CHECK(rep.points[0].theta == 0.0);
    CHECK_THAT(rep.points[0].delta, WithinAbs(5.09, 0.01));
    CHECK(rep.points[0].stability == Stability::Centre);
    CHECK_THAT(rep.points[1].theta, WithinAbs(std::numbers::pi / 2, 1e-15));
    CHECK_THAT(rep.points[1].delta, WithinAbs(4.34, 0.01));
    CHECK(rep.points[1].stability == Stability::Centre);
    CHECK(rep.region == RatioCase::Middle);
}

TEST_CASE("small positive B equilibria")
{
    const auto rep = equilibria(4.97, 0.05, initial_constant(4.97, 0.05, kR1Sq));
    REQUIRE(rep.points.size() == 2);
    CHECK_THAT(rep.points[0].delta, WithinAbs(6.297824, 1e-5));
    CHECK_THAT(rep.points[1].delta, WithinAbs(4.029390, 1e-5));
}

TEST_CASE("negative B gives a centre and a saddle")
{
    const double c = initial_constant(5.3932, -0.0015, kR1Sq);
    const auto rep = equilibria(5.3932, -0.0015, c);
    REQUIRE(rep.points.size() == 2);
    CHECK_THAT(rep.points[0].delta, WithinAbs(9.1274, 1e-3));
    CHECK(rep.points[0].stability == Stability::Centre);
    CHECK_THAT(rep.points[1].delta, WithinAbs(15.4383, 1e-3));
    CHECK(rep.points[1].stability == Stability::Saddle);
    for (const auto& p : rep.points) {
        CHECK_THAT(p.theta, WithinAbs(std::numbers::pi / 2, 1e-15));
        CHECK(p.in_well_defined_region);
    }
    CHECK(rep.region == RatioCase::AtLeastOne);
}

TEST_CASE("equilibria are zeros of the reduced field with the predicted eigenvalues")
{
    const std::pair<double, double> cases[] = {{3.63, 0.91}, {4.97, 0.05}, {5.3932, -0.0015}, {2.0, 1.5}, {4.0, -0.01}};
    for (auto [a, b] : cases) {
        const double c = initial_constant(a, b, kR1Sq);
        const auto rep = equilibria(a, b, c);
        for (const auto& p : rep.points) {
            if (!ReducedState{p.delta, p.theta, c, a, b}.in_region())
                continue;
            const auto [dd, dt] = reduced_rhs(ReducedState{p.delta, p.theta, c, a, b});
            CHECK(std::abs(dd) < 1e-10);
            CHECK(std::abs(dt) < 1e-10);
            // Zero trace, so the eigenvalues are +-sqrt(-det).
            const Eigen::Matrix2d j = reduced_jacobian(a, b, c, p.delta, p.theta);
            CHECK(std::abs(j.trace()) < 1e-6 * j.norm());
            CHECK_THAT(-j.determinant(), WithinRel(p.lambda_sq, 1e-6));
        }
    }
}

TEST_CASE("constant of motion along the envelope flow")
{
    AdaptiveOptions o;
    o.abs_tol = o.rel_tol = 1e-13;
    // The negative-B orbit escapes near T = 11, so it is followed to T = 10.
    for (auto [a, b, horizon] : {std::tuple{3.63, 0.91, 100.0}, {4.97, 0.05, 100.0}, {5.3932, -0.0015, 10.0}}) {
        const auto env = integrate_envelope(initial_envelope(64), a, b, horizon, 0.5, o);
        const double c0 = constant_of_motion(env.front(), a, b);
        CHECK_THAT(c0, WithinRel(initial_constant(a, b, kR1Sq), 1e-14));
        double worst = 0.0;
        for (const auto& e : env)
            worst = std::max(worst, std::abs(constant_of_motion(e, a, b) - c0));
        CHECK(worst <= 1e-9 * std::max(1.0, std::abs(c0)));
    }
}

TEST_CASE("B = 0 keeps the second mode silent")
{
    const auto env = integrate_envelope(initial_envelope(64), 3.63, 0.0, 50.0, 0.5);
    for (const auto& e : env)
        CHECK(std::abs(e.q2) == 0.0);
    CHECK_THAT(std::abs(env.back().q1), WithinRel(std::sqrt(kR1Sq), 1e-10));
    const auto rep = equilibria(3.63, 0.0, 0.0);
    CHECK(rep.singular);
    CHECK(rep.points.empty());
}

TEST_CASE("envelope tracks the two-mode oscillator")
{
    // Q_k ~ 2 Re(q_k e^{i w_k t}) with T = |eps| t.
    const auto model = build_lattice(64, 0.25, DisorderProfile::unit(64), Variant::Homogeneous);
    const auto c = extract_quadratic_coefficients(model, mode_basis(64));
    const double eps = std::abs(c.epsilon);
    const auto env = integrate_envelope(initial_envelope(64), c.a_tilde, c.b_tilde, 2.0, 0.25);

    Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
    y[0] = std::sqrt(65.0 / 2.0);
    IntegratorConfig cfg;
    cfg.t_final = 2.0 / eps;
    cfg.output_stride = 0.25 / eps;
    const auto tr = integrate_adaptive_rk8(TwoModeField{c}, y, cfg, [](const Eigen::VectorXd&) { return false; });
    REQUIRE(tr.samples.size() == env.size());
    for (std::size_t i = 0; i < env.size(); ++i) {
        const auto& z = tr.samples[i].y;
        CHECK_THAT(std::hypot(z[0], z[2] / c.omega1), WithinAbs(2.0 * std::abs(env[i].q1), 0.05));
        CHECK_THAT(std::hypot(z[1], z[3] / c.omega2), WithinAbs(2.0 * std::abs(env[i].q2), 0.05));
    }
}

TEST_CASE("polar variables satisfy the reduced equations")
{
    const double a = 3.63, b = 0.91;
    AdaptiveOptions o;
    o.abs_tol = o.rel_tol = 1e-13;
    const double h = 1e-3;
    const auto env = integrate_envelope(initial_envelope(64), a, b, 1.0, h, o);
    for (std::size_t i = 100; i + 1 < env.size(); i += 100) {
        const auto r = to_reduced(env[i], a, b);
        const auto r_next = to_reduced(env[i + 1], a, b);
        const auto r_prev = to_reduced(env[i - 1], a, b);
        const auto [dd, dt] = reduced_rhs(r);
        CHECK_THAT((r_next.delta - r_prev.delta) / (2 * h), WithinAbs(dd, 1e-3 * (1 + std::abs(dd))));
        CHECK_THAT(r.c, WithinRel(initial_constant(a, b, kR1Sq), 1e-10));
        (void)dt;
    }
}

TEST_CASE("negative B orbit escapes")
{
    const auto tr = reduced_trajectory(5.3932, -0.0015, kR1Sq, 50.0, 0.05);
    CHECK(tr.exit == ReducedExit::Escaped);
    CHECK_THAT(tr.end_T, WithinAbs(11.04, 0.05));
    CHECK(std::abs(tr.samples.back().delta) > 1e3);
    const auto reg = classify_region(5.3932, -0.0015, kR1Sq);
    CHECK_FALSE(reg.bounded);
    CHECK(reg.has_saddle);
    CHECK_THAT(reg.delta_lo, WithinAbs(kR1Sq, 1e-12));
    CHECK(std::isinf(reg.delta_hi));
}

TEST_CASE("positive B orbit stays bounded inside the region")
{
    const auto tr = reduced_trajectory(3.63, 0.91, kR1Sq, 200.0, 0.05);
    CHECK(tr.exit == ReducedExit::Completed);
    CHECK(tr.end_T == 200.0);
    const auto reg = classify_region(3.63, 0.91, kR1Sq);
    CHECK(reg.bounded);
    CHECK_FALSE(reg.has_saddle);
    for (const auto& s : tr.samples) {
        CHECK(s.delta >= reg.delta_lo - 1e-6);
        CHECK(s.delta <= reg.delta_hi + 1e-6);
        CHECK(s.theta >= 0.0);
        CHECK(s.theta < std::numbers::pi);
    }
}

TEST_CASE("thresholds as B tends to zero")
{
    const auto [samples, limits] = delta_crit_limits(3.63, {1e-1, 1e-3, 1e-5, 1e-7}, kR1Sq);
    CHECK(limits.first == kR1Sq);
    CHECK(limits.second == 0.0);
    CHECK_THAT(samples.back().delta_crit_1, WithinAbs(kR1Sq, 1e-12));
    CHECK_THAT(samples.back().delta_crit_2, WithinAbs(0.0, 1e-6));
    CHECK_THROWS_AS(delta_crit_limits(3.63, {1e-3, 1e-2}, kR1Sq), std::invalid_argument);
    CHECK_THROWS_AS(delta_crit_limits(3.63, {-1e-3}, kR1Sq), std::invalid_argument);
}

TEST_CASE("region thresholds in the parameter plane")
{
    // x = A B r1^2: equilibria exist for 1 + 12x >= 0, saddle for 1 - 4x > 0.
    const double r = kR1Sq;
    const auto pos = classify_region(3.63, 0.91, r);
    CHECK_THAT(pos.existence_value, WithinRel(1 + 12 * 3.63 * 0.91 * r, 1e-14));
    CHECK_THAT(pos.stability_value, WithinRel(1 - 4 * 3.63 * 0.91 * r, 1e-14));
    const double b_none = -1.0 / (12.0 * 5.0 * r) * 1.01;
    CHECK_FALSE(classify_region(5.0, b_none, r).equilibria_exist);
    CHECK(equilibria(5.0, b_none, initial_constant(5.0, b_none, r)).points.empty());
    CHECK(ratio_case(1.0) == RatioCase::AtLeastOne);
    CHECK(ratio_case(0.0) == RatioCase::Middle);
    CHECK(ratio_case(-1.5) == RatioCase::BelowMinusOne);
}

TEST_CASE("portrait grid")
{
    PortraitGrid g{8, -2.0, 9.0, 12};
    const double c = initial_constant(3.63, 0.91, kR1Sq);
    const auto pp = phase_portrait(3.63, 0.91, c, g);
    CHECK(pp.cells.size() == 96);
    CHECK_FALSE(pp.trajectory.has_value());
    for (const auto& cell : pp.cells) {
        CHECK(cell.in_region == ReducedState{cell.delta, cell.theta, c, 3.63, 0.91}.in_region());
        if (!cell.in_region)
            CHECK((cell.dtheta == 0.0 && cell.ddelta == 0.0));
    }
    CHECK_THROWS_AS(phase_portrait(3.63, 0.91, c, PortraitGrid{0, 0, 1, 4}), std::invalid_argument);
}

TEST_CASE("reduced system domain errors")
{
    CHECK_THROWS_AS(ratio_k(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(equilibria(1.0, -1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(equilibria(0.0, 1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(to_reduced(EnvelopeState{{1, 0}, {0, 0}, 0}, 3.63, 0.91), std::domain_error);
    CHECK_THROWS_AS(reduced_rhs(ReducedState{kR1Sq, 0.0, initial_constant(3.63, 0.91, kR1Sq), 3.63, 0.91}),
                    std::domain_error);
    CHECK_THROWS_AS(initial_envelope(1), std::invalid_argument);
    CHECK_THROWS_AS(reduced_trajectory(3.63, 0.91, -1.0, 10, 0.1), std::invalid_argument);
    CHECK(wrap_pi(-0.1) > 3.0);
    CHECK(wrap_pi(std::numbers::pi) == 0.0);
}
