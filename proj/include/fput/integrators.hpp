#ifndef FPUT_INTEGRATORS_HPP
#define FPUT_INTEGRATORS_HPP

/** @file
 * Time integration of the lattice models.
 *
 * The Hamiltonian model uses the fourth-order triple-jump composition of the
 * leapfrog (Yoshida), optionally carrying deviation vectors through the exact
 * linearisation of every kick and drift (tangent map). The non-Hamiltonian
 * model uses the adaptive DOP853 scheme, optionally on the state augmented
 * with deviation columns.
 */

#include "fput/dop853.hpp"
#include "fput/lattice.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fput {

struct IntegratorConfig {
    double dt = 0.01;              ///< fixed step of the symplectic path
    double abs_tol = 1e-12;        ///< adaptive path
    double rel_tol = 1e-12;
    double initial_step = 1e-3;
    double safety = 0.9;
    double t_final = 1.0;
    double escape_radius = 1e6;    ///< on max |x_j|
    double output_stride = 1.0;    ///< sampling interval of stored points

    void validate() const
    {
        if (!(dt > 0.0))
            throw std::invalid_argument("dt must be positive");
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
            throw std::invalid_argument("tolerances must be positive");
        if (!(t_final > 0.0))
            throw std::invalid_argument("t_final must be positive");
        if (!(escape_radius > 0.0))
            throw std::invalid_argument("escape_radius must be positive");
        if (!(output_stride > 0.0))
            throw std::invalid_argument("output_stride must be positive");
        if (!(initial_step > 0.0) || !(safety > 0.0 && safety < 1.0))
            throw std::invalid_argument("invalid adaptive step settings");
    }

    AdaptiveOptions adaptive() const
    {
        AdaptiveOptions o;
        o.abs_tol = abs_tol;
        o.rel_tol = rel_tol;
        o.initial_step = initial_step;
        o.safety = safety;
        return o;
    }
};

enum class RunStatus { Completed, BlownUp, Failed };

inline const char* to_string(RunStatus s)
{
    switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::BlownUp: return "blown_up";
    case RunStatus::Failed: return "failed";
    }
    return "unknown";
}

struct Sample {
    double t;
    Eigen::VectorXd y;
};

/// Stride-sampled run. For lattice runs y is the stacked (x, p) vector.
struct Trajectory {
    std::vector<Sample> samples;
    RunStatus status = RunStatus::Completed;
    double end_time = 0.0;         ///< time the run stopped at
    std::optional<double> blowup_time;
};

inline std::optional<double> detect_blowup(const Trajectory& tr)
{
    return tr.status == RunStatus::BlownUp ? tr.blowup_time : std::nullopt;
}

/// Blow-up test on a stacked (x, p) vector: any non-finite entry or any
/// |x_j| above the radius.
inline bool state_escaped(const Eigen::Ref<const Eigen::VectorXd>& z, Eigen::Index n, double escape_radius)
{
    if (escaped(z.head(n), escape_radius))
        return true;
    return !z.tail(z.size() - n).allFinite();
}

// ---------------------------------------------------------------------------
// Symplectic path
// ---------------------------------------------------------------------------

/// Triple-jump coefficients: drifts c1..c4, kicks d1..d3.
struct Yoshida4Coefficients {
    std::array<double, 4> drift;
    std::array<double, 3> kick;
};

inline const Yoshida4Coefficients& yoshida4_coefficients()
{
    static const Yoshida4Coefficients c = [] {
        const double cbrt2 = std::cbrt(2.0);
        const double w1 = 1.0 / (2.0 - cbrt2);
        const double w0 = -cbrt2 / (2.0 - cbrt2);
        return Yoshida4Coefficients{{w1 / 2, (w0 + w1) / 2, (w0 + w1) / 2, w1 / 2}, {w1, w0, w1}};
    }();
    return c;
}

/// In-place Yoshida step with optional deviation vectors. Holds the
/// acceleration scratch so long runs do not allocate.
class SymplecticStepper {
public:
    explicit SymplecticStepper(const LatticeModel& model) : model_(&model)
    {
        if (!model.is_hamiltonian())
            throw std::invalid_argument("symplectic integration requires the homogeneous (Hamiltonian) model");
        const auto n = static_cast<Eigen::Index>(model.size());
        acc_.resize(n);
        tmp_.resize(n);
    }

    void step(Eigen::Ref<Eigen::VectorXd> x, Eigen::Ref<Eigen::VectorXd> p, double dt)
    {
        const auto& c = yoshida4_coefficients();
        for (int s = 0; s < 3; ++s) {
            x.noalias() += (c.drift[s] * dt) * p;
            accelerations(*model_, x, acc_);
            p.noalias() += (c.kick[s] * dt) * acc_;
        }
        x.noalias() += (c.drift[3] * dt) * p;
    }

    /// Same step, with each deviation (dx, dp) pushed through the linearised
    /// drift and kick. Deviations are stored as stacked 2N columns.
    void step(Eigen::Ref<Eigen::VectorXd> x, Eigen::Ref<Eigen::VectorXd> p, Eigen::Ref<Eigen::MatrixXd> devs,
              double dt)
    {
        const auto& c = yoshida4_coefficients();
        const auto n = x.size();
        const auto k = devs.cols();
        for (int s = 0; s < 3; ++s) {
            const double cd = c.drift[s] * dt;
            x.noalias() += cd * p;
            devs.topRows(n).noalias() += cd * devs.bottomRows(n);
            const double kd = c.kick[s] * dt;
            for (Eigen::Index j = 0; j < k; ++j) {
                force_jacobian_apply(*model_, x, devs.col(j).head(n), tmp_);
                devs.col(j).tail(n).noalias() += kd * tmp_;
            }
            accelerations(*model_, x, acc_);
            p.noalias() += kd * acc_;
        }
        const double cd = c.drift[3] * dt;
        x.noalias() += cd * p;
        devs.topRows(n).noalias() += cd * devs.bottomRows(n);
    }

private:
    const LatticeModel* model_;
    Eigen::VectorXd acc_, tmp_;
};

inline PhaseState yoshida4_step(const PhaseState& state, const LatticeModel& model, double dt)
{
    if (!state.x.allFinite() || !state.p.allFinite())
        throw std::invalid_argument("yoshida4_step: non-finite state");
    detail::check_size(model, state.x.size(), "yoshida4_step");
    detail::check_size(model, state.p.size(), "yoshida4_step momenta");
    SymplecticStepper stepper(model);
    PhaseState out = state;
    stepper.step(out.x, out.p, dt);
    out.t = state.t + dt;
    return out;
}

/// One symplectic step of the state together with its deviation vectors.
inline std::pair<PhaseState, std::vector<Eigen::VectorXd>>
tangent_map_step(const PhaseState& state, std::span<const Eigen::VectorXd> deviations, const LatticeModel& model,
                 double dt)
{
    const auto n = static_cast<Eigen::Index>(model.size());
    detail::check_size(model, state.x.size(), "tangent_map_step");
    Eigen::MatrixXd devs(2 * n, static_cast<Eigen::Index>(deviations.size()));
    for (std::size_t j = 0; j < deviations.size(); ++j) {
        if (deviations[j].size() != 2 * n)
            throw std::invalid_argument("tangent_map_step: deviation vectors must have length 2N");
        devs.col(static_cast<Eigen::Index>(j)) = deviations[j];
    }
    SymplecticStepper stepper(model);
    PhaseState out = state;
    stepper.step(out.x, out.p, devs, dt);
    out.t = state.t + dt;
    std::vector<Eigen::VectorXd> next;
    next.reserve(deviations.size());
    for (Eigen::Index j = 0; j < devs.cols(); ++j)
        next.emplace_back(devs.col(j));
    return {std::move(out), std::move(next)};
}

namespace detail {
inline long long stride_in_steps(double stride, double dt)
{
    const double r = stride / dt;
    const long long s = std::llround(r);
    if (s < 1 || std::abs(r - static_cast<double>(s)) > 1e-9 * r)
        throw std::invalid_argument("output_stride must be a positive integer multiple of dt");
    return s;
}
} // namespace detail

/// Fixed-step symplectic run with samples every output_stride (a multiple of
/// dt). Step k lands on t = k*dt exactly, so there is no drift in sample times.
inline Trajectory integrate_symplectic(const LatticeModel& model, const PhaseState& initial,
                                       const IntegratorConfig& config)
{
    config.validate();
    detail::check_size(model, initial.x.size(), "integrate_symplectic");
    detail::check_size(model, initial.p.size(), "integrate_symplectic momenta");
    const auto n = static_cast<Eigen::Index>(model.size());
    const long long stride = detail::stride_in_steps(config.output_stride, config.dt);
    const long long total = std::llround(std::ceil(config.t_final / config.dt - 1e-9));

    Trajectory tr;
    SymplecticStepper stepper(model);
    Eigen::VectorXd x = initial.x, p = initial.p;
    const double t0 = initial.t;
    tr.samples.push_back({t0, initial.stacked()});
    for (long long k = 1; k <= total; ++k) {
        stepper.step(x, p, config.dt);
        const double t = t0 + static_cast<double>(k) * config.dt;
        if (escaped(x, config.escape_radius) || !p.allFinite()) {
            tr.status = RunStatus::BlownUp;
            tr.blowup_time = t;
            tr.end_time = t;
            return tr;
        }
        if (k % stride == 0 || k == total) {
            Eigen::VectorXd z(2 * n);
            z << x, p;
            tr.samples.push_back({t, std::move(z)});
        }
    }
    tr.end_time = t0 + static_cast<double>(total) * config.dt;
    return tr;
}

// ---------------------------------------------------------------------------
// Adaptive path
// ---------------------------------------------------------------------------

/// First-order lattice flow on stacked z = (x, p).
struct LatticeVectorField {
    const LatticeModel* model;

    void operator()(double, const Eigen::VectorXd& z, Eigen::VectorXd& dz) const
    {
        const auto n = static_cast<Eigen::Index>(model->size());
        dz.head(n) = z.tail(n);
        accelerations(*model, z.head(n), dz.tail(n));
    }
};

/// Lattice flow augmented with k deviation columns: z = (x, p, w_1, ..., w_k),
/// each w of length 2N following w' = J(x) w.
struct VariationalVectorField {
    const LatticeModel* model;

    void operator()(double, const Eigen::VectorXd& z, Eigen::VectorXd& dz) const
    {
        const auto n = static_cast<Eigen::Index>(model->size());
        dz.head(n) = z.segment(n, n);
        accelerations(*model, z.head(n), dz.segment(n, n));
        const auto k = (z.size() - 2 * n) / (2 * n);
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto off = 2 * n * (j + 1);
            dz.segment(off, n) = z.segment(off + n, n);
            force_jacobian_apply(*model, z.head(n), z.segment(off, n), dz.segment(off + n, n));
        }
    }
};

/// Adaptive RK8 run of an arbitrary vector field. `escape(y)` decides blow-up;
/// the run stops at the first accepted step where it fires and no later
/// samples are stored. Steps are clipped to land on every output time.
template <class Rhs, class EscapeTest>
Trajectory integrate_adaptive_rk8(Rhs rhs, const Eigen::VectorXd& initial, const IntegratorConfig& config,
                                  EscapeTest escape, double t0 = 0.0)
{
    config.validate();
    if (!initial.allFinite())
        throw std::invalid_argument("integrate_adaptive_rk8: non-finite initial state");
    Trajectory tr;
    Dop853 stepper(std::move(rhs), initial.size(), config.adaptive());
    Eigen::VectorXd y = initial;
    double t = t0;
    const double t_end = t0 + config.t_final;
    tr.samples.push_back({t, y});
    stepper.reset(t, y);
    long long next_index = 1;
    while (t < t_end) {
        const double t_out = std::min(t0 + static_cast<double>(next_index) * config.output_stride, t_end);
        if (stepper.step(t, y, t_out) == StepOutcome::Underflow) {
            tr.end_time = t;
            if (escape(y)) {
                tr.status = RunStatus::BlownUp;
                tr.blowup_time = t;
            } else {
                tr.status = RunStatus::Failed;
            }
            return tr;
        }
        if (escape(y)) {
            tr.status = RunStatus::BlownUp;
            tr.blowup_time = t;
            tr.end_time = t;
            return tr;
        }
        if (t >= t_out) {
            tr.samples.push_back({t, y});
            ++next_index;
        }
    }
    tr.end_time = t;
    return tr;
}

/// Lattice convenience overload: blow-up is judged on the (x, p) block.
inline Trajectory integrate_adaptive_rk8(const LatticeModel& model, const PhaseState& initial,
                                         const IntegratorConfig& config)
{
    const auto n = static_cast<Eigen::Index>(model.size());
    detail::check_size(model, initial.x.size(), "integrate_adaptive_rk8");
    const double radius = config.escape_radius;
    return integrate_adaptive_rk8(
        LatticeVectorField{&model}, initial.stacked(), config,
        [n, radius](const Eigen::VectorXd& z) { return state_escaped(z, n, radius); }, initial.t);
}

/// Dispatches on the model: symplectic for the Hamiltonian chain, adaptive
/// RK8 otherwise.
inline Trajectory integrate_lattice(const LatticeModel& model, const PhaseState& initial,
                                    const IntegratorConfig& config)
{
    return model.is_hamiltonian() ? integrate_symplectic(model, initial, config)
                                  : integrate_adaptive_rk8(model, initial, config);
}

} // namespace fput

#endif // FPUT_INTEGRATORS_HPP
