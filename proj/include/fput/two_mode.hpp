#ifndef FPUT_TWO_MODE_HPP
#define FPUT_TWO_MODE_HPP

/** @file
 * Two-mode reduction near the 1:2 resonance w2 = 2 w1 + eps.
 *
 * Slow-time envelope equations
 *     i q1' = q1 + A q1* q2,     i q2' = q2 + B q1^2
 * with A = a_tilde, B = b_tilde; polar coordinates q1 = r1 e^{i phi1},
 * q2 = r2 e^{2 i phi2}; reduced variables P = r1^2 + r2^2, Delta = r1^2 - r2^2,
 * theta = phi2 - phi1 (mod pi). The combination C = P - k Delta with
 * k = (A - B)/(A + B) is conserved, so (Delta, theta) is a planar system.
 *
 * The slow time runs as T = eps t. Since the envelope system is reversible
 * (conj(q(-T)) is again a solution and the initial data are real), all
 * amplitudes are even in T and everything here integrates forward in |T|.
 */

#include "fput/dop853.hpp"
#include "fput/normal_modes.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fput {

using cplx = std::complex<double>;

struct EnvelopeState {
    cplx q1{0.0, 0.0};
    cplx q2{0.0, 0.0};
    double T = 0.0;
};

/// (dq1/dT, dq2/dT).
inline std::pair<cplx, cplx> envelope_rhs(const EnvelopeState& s, double a_tilde, double b_tilde)
{
    const cplx mi{0.0, -1.0};
    return {mi * (s.q1 + a_tilde * std::conj(s.q1) * s.q2), mi * (s.q2 + b_tilde * s.q1 * s.q1)};
}

/// q1(0) = Q1(0)/2 for the lowest-mode lattice start, q2(0) = 0.
inline EnvelopeState initial_envelope(std::size_t n)
{
    if (n < 2)
        throw std::invalid_argument("initial_envelope: need n >= 2");
    return EnvelopeState{cplx(0.5 * std::sqrt(0.5 * static_cast<double>(n + 1)), 0.0), cplx(0.0, 0.0), 0.0};
}

inline double ratio_k(double a_tilde, double b_tilde)
{
    if (a_tilde + b_tilde == 0.0)
        throw std::invalid_argument("reduced system undefined for a_tilde + b_tilde = 0");
    return (a_tilde - b_tilde) / (a_tilde + b_tilde);
}

struct ReducedState {
    double delta = 0.0;
    double theta = 0.0;   ///< in [0, pi)
    double c = 0.0;
    double a_tilde = 0.0;
    double b_tilde = 0.0;

    double p() const { return c + ratio_k(a_tilde, b_tilde) * delta; }
    bool in_region() const
    {
        const double pp = p();
        return pp - delta > 0.0 && pp + delta >= 0.0;
    }
};

inline double wrap_pi(double theta)
{
    double t = std::fmod(theta, std::numbers::pi);
    if (t < 0.0)
        t += std::numbers::pi;
    if (t >= std::numbers::pi)
        t = 0.0;
    return t;
}

inline double constant_of_motion(const EnvelopeState& s, double a_tilde, double b_tilde)
{
    // (r1^2 + r2^2) - k (r1^2 - r2^2) with 1 -+ k written out: no cancellation
    // when k is close to one.
    if (a_tilde + b_tilde == 0.0)
        throw std::invalid_argument("constant_of_motion: a_tilde + b_tilde = 0");
    const double r1s = std::norm(s.q1), r2s = std::norm(s.q2);
    return 2.0 * (b_tilde * r1s + a_tilde * r2s) / (a_tilde + b_tilde);
}

/// C for the start q1 = r1, q2 = 0: P = Delta = r1^2.
inline double initial_constant(double a_tilde, double b_tilde, double r1_sq)
{
    if (a_tilde + b_tilde == 0.0)
        throw std::invalid_argument("initial_constant: a_tilde + b_tilde = 0");
    return 2.0 * b_tilde * r1_sq / (a_tilde + b_tilde);
}

inline ReducedState to_reduced(const EnvelopeState& s, double a_tilde, double b_tilde)
{
    if (s.q1 == 0.0 || s.q2 == 0.0)
        throw std::domain_error("to_reduced: phase undefined for a zero amplitude");
    ReducedState r;
    r.a_tilde = a_tilde;
    r.b_tilde = b_tilde;
    r.delta = std::norm(s.q1) - std::norm(s.q2);
    r.theta = wrap_pi(0.5 * std::arg(s.q2) - std::arg(s.q1));
    r.c = constant_of_motion(s, a_tilde, b_tilde);
    return r;
}

/// (dDelta/dT, dtheta/dT) with P eliminated through C.
inline std::pair<double, double> reduced_rhs(const ReducedState& s)
{
    const double a = s.a_tilde, b = s.b_tilde;
    const double p = s.p();
    const double d = s.delta;
    if (!(p - d > 0.0))
        throw std::domain_error("reduced_rhs: state outside the well-defined region (P - Delta <= 0)");
    const double root = std::sqrt(2.0 * (p - d));
    const double s2 = std::sin(2.0 * s.theta), c2 = std::cos(2.0 * s.theta);
    const double ddelta = root * s2 * (p + d) * (a + b) / 2.0;
    const double dtheta = -(2.0 * a * c2 * (d - p) + b * c2 * (d + p) - root) / (2.0 * root);
    return {ddelta, dtheta};
}

// ---------------------------------------------------------------------------
// Equilibria and regions
// ---------------------------------------------------------------------------

enum class Stability { Centre, Saddle, Degenerate };

inline const char* to_string(Stability s)
{
    switch (s) {
    case Stability::Centre: return "centre";
    case Stability::Saddle: return "saddle";
    case Stability::Degenerate: return "degenerate";
    }
    return "unknown";
}

/// Split of the Delta axis by the sign pattern of (A - B)/(A + B).
enum class RatioCase { AtLeastOne, Middle, BelowMinusOne };

inline const char* to_string(RatioCase r)
{
    switch (r) {
    case RatioCase::AtLeastOne: return "ratio>=1";
    case RatioCase::Middle: return "-1<=ratio<1";
    case RatioCase::BelowMinusOne: return "ratio<-1";
    }
    return "unknown";
}

inline RatioCase ratio_case(double k)
{
    if (k >= 1.0)
        return RatioCase::AtLeastOne;
    if (k >= -1.0)
        return RatioCase::Middle;
    return RatioCase::BelowMinusOne;
}

struct EquilibriumPoint {
    int index = 1;               ///< j = 1, 2
    double theta = 0.0;
    double delta = 0.0;
    double lambda_sq = 0.0;      ///< eigenvalues are +-sqrt(lambda_sq)
    Stability stability = Stability::Centre;
    bool in_well_defined_region = false;
};

struct EquilibriumReport {
    std::vector<EquilibriumPoint> points;
    RatioCase region = RatioCase::Middle;
    double delta_crit_1 = 0.0;
    double delta_crit_2 = 0.0;
    double existence_radicand = 0.0;  ///< 1 + 6A(A+B)C
    bool singular = false;             ///< B = 0: closed form divides by B
};

inline double delta_crit_1(double a_tilde, double b_tilde, double c) { return c * (a_tilde + b_tilde) / (2.0 * b_tilde); }
inline double delta_crit_2(double a_tilde, double b_tilde, double c) { return -c * (a_tilde + b_tilde) / (2.0 * a_tilde); }

inline EquilibriumReport equilibria(double a_tilde, double b_tilde, double c)
{
    const double a = a_tilde, b = b_tilde;
    if (a + b == 0.0)
        throw std::invalid_argument("equilibria: a_tilde + b_tilde = 0");
    if (a == 0.0)
        throw std::invalid_argument("equilibria: a_tilde = 0");
    EquilibriumReport rep;
    rep.region = ratio_case(ratio_k(a, b));
    rep.delta_crit_2 = delta_crit_2(a, b, c);
    rep.existence_radicand = 1.0 + 6.0 * a * (a + b) * c;
    if (b == 0.0) {
        rep.singular = true;
        rep.delta_crit_1 = std::copysign(std::numeric_limits<double>::infinity(), c * (a + b));
        return rep;
    }
    rep.delta_crit_1 = delta_crit_1(a, b, c);
    if (rep.existence_radicand < 0.0)
        return rep;

    const double root = std::sqrt(rep.existence_radicand);
    for (int j = 1; j <= 2; ++j) {
        const double sgn = (j % 2 == 0) ? 1.0 : -1.0;  // (-1)^j
        EquilibriumPoint e;
        e.index = j;
        e.delta = (6.0 * a * a * c - 3.0 * a * b * c - sgn * root - 1.0) * (a + b) / (18.0 * a * a * b);
        e.theta = (b > 0.0 && j == 1) ? 0.0 : std::numbers::pi / 2.0;
        e.lambda_sq = (-3.0 - 18.0 * a * a * c - 18.0 * a * b * c + 6.0 * sgn * root) / 9.0;
        e.stability = e.lambda_sq < 0.0 ? Stability::Centre
                      : e.lambda_sq > 0.0 ? Stability::Saddle
                                          : Stability::Degenerate;
        e.in_well_defined_region = ReducedState{e.delta, e.theta, c, a, b}.in_region();
        rep.points.push_back(e);
    }
    return rep;
}

/// Parameter-plane classification for the lattice start q1 = r1, q2 = 0.
struct RegionDescriptor {
    double ratio = 0.0;
    RatioCase ratio_case = RatioCase::Middle;
    double c = 0.0;
    double delta_crit_1 = 0.0;
    double delta_crit_2 = 0.0;
    double delta_lo = 0.0;             ///< well-defined Delta interval (may be infinite)
    double delta_hi = 0.0;
    double existence_value = 0.0;      ///< 1 + 12 A B r1^2; equilibria exist iff >= 0
    double stability_value = 0.0;      ///< 1 - 4 A B r1^2; a saddle appears iff > 0
    bool equilibria_exist = false;
    bool has_saddle = false;
    bool bounded = false;
};

inline RegionDescriptor classify_region(double a_tilde, double b_tilde, double r1_sq)
{
    const double a = a_tilde, b = b_tilde;
    RegionDescriptor d;
    d.ratio = ratio_k(a, b);
    d.ratio_case = ratio_case(d.ratio);
    d.c = initial_constant(a, b, r1_sq);
    d.delta_crit_1 = b != 0.0 ? delta_crit_1(a, b, d.c) : r1_sq;
    d.delta_crit_2 = a != 0.0 ? delta_crit_2(a, b, d.c) : -std::numeric_limits<double>::infinity();

    // P - Delta = C + (k - 1) Delta > 0 and P + Delta = C + (k + 1) Delta >= 0.
    const double inf = std::numeric_limits<double>::infinity();
    d.delta_lo = -inf;
    d.delta_hi = inf;
    const double km1 = d.ratio - 1.0, kp1 = d.ratio + 1.0;
    if (km1 < 0.0)
        d.delta_hi = std::min(d.delta_hi, -d.c / km1);
    else if (km1 > 0.0)
        d.delta_lo = std::max(d.delta_lo, -d.c / km1);
    if (kp1 > 0.0)
        d.delta_lo = std::max(d.delta_lo, -d.c / kp1);
    else if (kp1 < 0.0)
        d.delta_hi = std::min(d.delta_hi, -d.c / kp1);

    const double x = a * b * r1_sq;
    d.existence_value = 1.0 + 12.0 * x;
    d.stability_value = 1.0 - 4.0 * x;
    d.equilibria_exist = b != 0.0 && d.existence_value >= 0.0;
    d.has_saddle = d.equilibria_exist && d.stability_value > 0.0;
    d.bounded = b > 0.0 && d.stability_value < 0.0;
    return d;
}

struct DeltaCritSample {
    double b_tilde;
    double delta_crit_1;
    double delta_crit_2;
};

/// Both thresholds along a B -> 0+ sequence with C taken from the lattice
/// start. The limits are (r1^2, 0).
inline std::pair<std::vector<DeltaCritSample>, std::pair<double, double>>
delta_crit_limits(double a_tilde, const std::vector<double>& b_sequence, double r1_sq)
{
    std::vector<DeltaCritSample> out;
    double prev = std::numeric_limits<double>::infinity();
    for (double b : b_sequence) {
        if (!(b > 0.0) || !(b < prev))
            throw std::invalid_argument("delta_crit_limits: sequence must be positive and strictly decreasing");
        prev = b;
        const double c = initial_constant(a_tilde, b, r1_sq);
        out.push_back({b, delta_crit_1(a_tilde, b, c), delta_crit_2(a_tilde, b, c)});
    }
    return {std::move(out), {r1_sq, 0.0}};
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

namespace detail {

struct EnvelopeField {
    double a, b;
    void operator()(double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) const
    {
        const auto [d1, d2] = envelope_rhs(EnvelopeState{cplx(y[0], y[1]), cplx(y[2], y[3]), 0.0}, a, b);
        dy[0] = d1.real();
        dy[1] = d1.imag();
        dy[2] = d2.real();
        dy[3] = d2.imag();
    }
};

// Out-of-region stages return NaN so the controller shrinks the step
// instead of aborting it.
struct ReducedField {
    double a, b, c;
    void operator()(double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) const
    {
        const ReducedState s{y[0], y[1], c, a, b};
        if (!(s.p() - s.delta > 0.0) || !y.allFinite()) {
            dy.setConstant(std::numeric_limits<double>::quiet_NaN());
            return;
        }
        const auto [dd, dt] = reduced_rhs(s);
        dy[0] = dd;
        dy[1] = dt;
    }
};

} // namespace detail

/// Envelope samples every output_dT up to T_final (slow time measured as |T|).
inline std::vector<EnvelopeState> integrate_envelope(const EnvelopeState& start, double a_tilde, double b_tilde,
                                                     double t_final, double output_dT, AdaptiveOptions opts = {})
{
    if (!(t_final > 0.0) || !(output_dT > 0.0))
        throw std::invalid_argument("integrate_envelope: horizon and output step must be positive");
    Eigen::VectorXd y(4);
    y << start.q1.real(), start.q1.imag(), start.q2.real(), start.q2.imag();
    Dop853 stepper(detail::EnvelopeField{a_tilde, b_tilde}, 4, opts);
    double t = start.T;
    const double t_end = start.T + t_final;
    stepper.reset(t, y);
    std::vector<EnvelopeState> out{start};
    long long k = 1;
    while (t < t_end) {
        const double target = std::min(start.T + static_cast<double>(k) * output_dT, t_end);
        if (stepper.step(t, y, target) == StepOutcome::Underflow)
            throw std::runtime_error("integrate_envelope: step size underflow at T = " + std::to_string(t));
        if (t >= target) {
            out.push_back({cplx(y[0], y[1]), cplx(y[2], y[3]), t});
            ++k;
        }
    }
    return out;
}

struct ReducedSample {
    double T;
    double delta;
    double theta;   ///< wrapped to [0, pi)
};

enum class ReducedExit { Completed, Escaped, LeftRegion };

inline const char* to_string(ReducedExit e)
{
    switch (e) {
    case ReducedExit::Completed: return "completed";
    case ReducedExit::Escaped: return "escaped";
    case ReducedExit::LeftRegion: return "left_region";
    }
    return "unknown";
}

struct ReducedTrajectory {
    std::vector<ReducedSample> samples;
    double c = 0.0;
    ReducedExit exit = ReducedExit::Completed;
    double end_T = 0.0;
};

/// Reduced trajectory of the lattice start q1 = sqrt(r1_sq), q2 = 0.
///
/// On the line r2 = 0 (P = Delta) the polar coordinates are singular. The
/// first handoff_T of slow time is therefore integrated in (q1, q2), and so is
/// every later passage close to that line: once P - Delta drops below
/// switch_gap the state is mapped back to (q1, q2) (phi1 = 0, which the phase
/// symmetry allows), carried through the passage, and handed back when the gap
/// is growing again beyond 4 switch_gap. The run stops once |Delta| exceeds
/// escape_delta.
inline ReducedTrajectory reduced_trajectory(double a_tilde, double b_tilde, double r1_sq, double t_final,
                                            double output_dT, double escape_delta = 1e3,
                                            double handoff_T = 1e-3, AdaptiveOptions opts = {},
                                            double switch_gap = 1e-6)
{
    if (!(r1_sq > 0.0) || !(handoff_T > 0.0) || !(t_final > handoff_T) || !(output_dT > 0.0))
        throw std::invalid_argument("reduced_trajectory: need r1_sq > 0, t_final > handoff_T > 0, output_dT > 0");
    const double k = ratio_k(a_tilde, b_tilde);
    const double c = initial_constant(a_tilde, b_tilde, r1_sq);

    ReducedTrajectory tr;
    tr.c = c;
    tr.samples.push_back({0.0, r1_sq, 0.0});

    auto gap_of = [&](double delta) { return c + k * delta - delta; };
    auto to_env = [&](double delta, double theta) {
        const double p = c + k * delta;
        return Eigen::Vector4d(std::sqrt(std::max(0.0, 0.5 * (p + delta))), 0.0,
                               std::sqrt(std::max(0.0, 0.5 * (p - delta))) * std::cos(2.0 * theta),
                               std::sqrt(std::max(0.0, 0.5 * (p - delta))) * std::sin(2.0 * theta));
    };
    auto env_to_red = [&](const Eigen::VectorXd& e) {
        const cplx q1(e[0], e[1]), q2(e[2], e[3]);
        const double d = std::norm(q1) - std::norm(q2);
        const double th = q2 == 0.0 ? 0.0 : wrap_pi(0.5 * std::arg(q2) - std::arg(q1));
        return std::pair<double, double>{d, th};
    };

    Dop853 env_stepper(detail::EnvelopeField{a_tilde, b_tilde}, 4, opts);
    Dop853 red_stepper(detail::ReducedField{a_tilde, b_tilde, c}, 2, opts);
    Eigen::VectorXd ye(4), yr(2);
    ye << std::sqrt(r1_sq), 0.0, 0.0, 0.0;
    bool envelope_mode = true;
    double t = 0.0;
    env_stepper.reset(t, ye);
    double min_exit_T = handoff_T;     // the start passage lasts at least handoff_T
    double prev_gap = 0.0;
    bool armed = false;
    bool first_passage = true;
    long long next = 1;

    while (t < t_final) {
        const double target = std::min(static_cast<double>(next) * output_dT, t_final);
        const double stop = envelope_mode && t < min_exit_T ? std::min(target, min_exit_T) : target;
        double delta = 0.0, theta = 0.0;
        if (envelope_mode) {
            if (env_stepper.step(t, ye, stop) == StepOutcome::Underflow) {
                tr.exit = ReducedExit::LeftRegion;
                break;
            }
            std::tie(delta, theta) = env_to_red(ye);
            const double gap = gap_of(delta);
            const bool away = gap > 4.0 * switch_gap && gap > prev_gap;
            // At the start a very slow departure (tiny B) is handed over at
            // handoff_T regardless of the gap.
            if (t >= min_exit_T && (away || first_passage)) {
                envelope_mode = false;
                first_passage = false;
                yr << delta, theta;
                red_stepper.reset(t, yr);
                armed = away;
            }
            prev_gap = gap;
        } else {
            if (red_stepper.step(t, yr, stop) == StepOutcome::Underflow) {
                tr.exit = std::abs(yr[0]) > escape_delta ? ReducedExit::Escaped : ReducedExit::LeftRegion;
                break;
            }
            delta = yr[0];
            theta = wrap_pi(yr[1]);
            const double gap = gap_of(delta);
            if (gap > 4.0 * switch_gap)
                armed = true;
            if (armed && gap < switch_gap) {
                envelope_mode = true;
                ye = to_env(delta, theta);
                env_stepper.reset(t, ye);
                min_exit_T = t;
                prev_gap = gap;
                armed = false;
            }
        }
        if (std::abs(delta) > escape_delta) {
            tr.samples.push_back({t, delta, theta});
            tr.exit = ReducedExit::Escaped;
            break;
        }
        if (t >= target) {
            tr.samples.push_back({t, delta, theta});
            ++next;
        }
    }
    tr.end_T = t;
    return tr;
}

struct PortraitGrid {
    std::size_t theta_points = 64;
    double delta_min = 0.0;
    double delta_max = 10.0;
    std::size_t delta_points = 64;
};

struct PortraitCell {
    double theta, delta, dtheta, ddelta;
    bool in_region;
};

struct PhasePortrait {
    std::vector<PortraitCell> cells;
    std::optional<ReducedTrajectory> trajectory;
};

/// Vector field on a (theta, Delta) grid with theta in [0, pi); cells outside
/// the well-defined region carry zeros and in_region = false. With r1_sq set,
/// the orbit of the lattice start is attached as well.
inline PhasePortrait phase_portrait(double a_tilde, double b_tilde, double c, const PortraitGrid& grid,
                                    std::optional<double> r1_sq = std::nullopt, double t_final = 50.0,
                                    double output_dT = 0.05)
{
    if (grid.theta_points < 1 || grid.delta_points < 2 || !(grid.delta_max > grid.delta_min))
        throw std::invalid_argument("phase_portrait: invalid grid");
    PhasePortrait pp;
    pp.cells.reserve(grid.theta_points * grid.delta_points);
    for (std::size_t i = 0; i < grid.theta_points; ++i) {
        const double th = std::numbers::pi * static_cast<double>(i) / static_cast<double>(grid.theta_points);
        for (std::size_t j = 0; j < grid.delta_points; ++j) {
            const double d = grid.delta_min + (grid.delta_max - grid.delta_min) * static_cast<double>(j)
                                                  / static_cast<double>(grid.delta_points - 1);
            const ReducedState s{d, th, c, a_tilde, b_tilde};
            if (!s.in_region()) {
                pp.cells.push_back({th, d, 0.0, 0.0, false});
                continue;
            }
            const auto [dd, dt] = reduced_rhs(s);
            pp.cells.push_back({th, d, dt, dd, true});
        }
    }
    if (r1_sq)
        pp.trajectory = reduced_trajectory(a_tilde, b_tilde, *r1_sq, t_final, output_dT);
    return pp;
}

// ---------------------------------------------------------------------------
// Two-mode ODE in the fast time
// ---------------------------------------------------------------------------

/// (Q1, Q2, P1, P2)' for the two-mode system built from extracted coefficients.
struct TwoModeField {
    QuadraticCoefficients coeffs;
    void operator()(double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) const
    {
        const auto [n1, n2] = coeffs.nonlinear(y[0], y[1]);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -coeffs.omega1 * coeffs.omega1 * y[0] + n1;
        dy[3] = -coeffs.omega2 * coeffs.omega2 * y[1] + n2;
    }
};

} // namespace fput

#endif // FPUT_TWO_MODE_HPP
