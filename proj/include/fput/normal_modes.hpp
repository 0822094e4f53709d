#ifndef FPUT_NORMAL_MODES_HPP
#define FPUT_NORMAL_MODES_HPP

/** @file
 * Normal-mode transform of the fixed-end chain, mode energies, truncated mode
 * dynamics and the numerical two-mode quadratic coefficients.
 *
 * The transform matrix A_{jk} = sqrt(2/(N+1)) sin(jk pi/(N+1)) is symmetric
 * and its own inverse, so the same product maps real space to mode space and
 * back.
 */

#include "fput/lattice.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#ifdef FPUT_HAS_FFTW
#include <fftw3.h>
#include <mutex>
#endif

namespace fput {

/// Size above which the fast sine transform is used when available.
inline constexpr std::size_t kFastTransformThreshold = 256;

#ifdef FPUT_HAS_FFTW
namespace detail {

// DST-I plan for one length. FFTW planning is not thread-safe; execution of an
// existing plan on caller-owned arrays is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

class SinePlan {
public:
    explicit SinePlan(std::size_t n)
    {
        std::lock_guard lock(fftw_planner_mutex());
        double* in = fftw_alloc_real(n);
        double* out = fftw_alloc_real(n);
        plan_ = fftw_plan_r2r_1d(static_cast<int>(n), in, out, FFTW_RODFT00, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        if (!plan_)
            throw std::runtime_error("FFTW failed to plan a sine transform");
    }
    ~SinePlan()
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    SinePlan(const SinePlan&) = delete;
    SinePlan& operator=(const SinePlan&) = delete;

    // out_k = 2 sum_j in_j sin(pi (j+1)(k+1) / (n+1))
    void execute(const double* in, double* out) const
    {
        fftw_execute_r2r(plan_, const_cast<double*>(in), out);
    }

private:
    fftw_plan plan_;
};

} // namespace detail
#endif

class ModeBasis;
ModeBasis mode_basis(std::size_t n);

/// Transform matrix and linear frequencies for an N-particle chain.
class ModeBasis {
public:
    std::size_t size() const { return static_cast<std::size_t>(frequencies_.size()); }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const Eigen::VectorXd& frequencies() const { return frequencies_; }
    double frequency(std::size_t k) const { return frequencies_[static_cast<Eigen::Index>(k)]; }

    bool uses_fast_transform() const
    {
#ifdef FPUT_HAS_FFTW
        return static_cast<bool>(plan_);
#else
        return false;
#endif
    }

    /// y = A v. Since A is an involution this is both the forward and the
    /// inverse map.
    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const
    {
        if (static_cast<std::size_t>(v.size()) != size())
            throw std::invalid_argument("mode transform: expected length " + std::to_string(size())
                                        + ", got " + std::to_string(v.size()));
#ifdef FPUT_HAS_FFTW
        if (plan_) {
            Eigen::VectorXd in = v;
            Eigen::VectorXd out(v.size());
            plan_->execute(in.data(), out.data());
            out *= 0.5 * std::sqrt(2.0 / static_cast<double>(size() + 1));
            return out;
        }
#endif
        return matrix_ * v;
    }

    /// Dense product regardless of size.
    Eigen::VectorXd apply_dense(const Eigen::Ref<const Eigen::VectorXd>& v) const
    {
        if (static_cast<std::size_t>(v.size()) != size())
            throw std::invalid_argument("mode transform: dimension mismatch");
        return matrix_ * v;
    }

private:
    friend ModeBasis mode_basis(std::size_t);
    Eigen::MatrixXd matrix_;
    Eigen::VectorXd frequencies_;
#ifdef FPUT_HAS_FFTW
    std::shared_ptr<const detail::SinePlan> plan_;
#endif
};

inline ModeBasis mode_basis(std::size_t n)
{
    if (n < 1)
        throw std::invalid_argument("mode_basis: n must be positive");
    ModeBasis b;
    const auto nn = static_cast<Eigen::Index>(n);
    const double np1 = static_cast<double>(n + 1);
    const double scale = std::sqrt(2.0 / np1);
    b.matrix_.resize(nn, nn);
    b.frequencies_.resize(nn);
    for (Eigen::Index j = 0; j < nn; ++j) {
        for (Eigen::Index k = 0; k <= j; ++k) {
            // Reduce jk mod 2(N+1) so the sine argument stays small and the
            // matrix is exactly symmetric.
            const auto jk = static_cast<long long>((j + 1) * (k + 1)) % (2 * static_cast<long long>(n + 1));
            const double val = scale * std::sin(static_cast<double>(jk) * std::numbers::pi / np1);
            b.matrix_(j, k) = val;
            b.matrix_(k, j) = val;
        }
        b.frequencies_[j] = 2.0 * std::sin(static_cast<double>(j + 1) * std::numbers::pi / (2.0 * np1));
    }
#ifdef FPUT_HAS_FFTW
    if (n > kFastTransformThreshold)
        b.plan_ = std::make_shared<const detail::SinePlan>(n);
#endif
    return b;
}

/// Mode amplitudes Q and velocities P.
struct ModeState {
    Eigen::VectorXd q;
    Eigen::VectorXd p;
    double t = 0.0;
};

inline ModeState to_modes(const PhaseState& s, const ModeBasis& basis)
{
    if (s.x.size() != s.p.size())
        throw std::invalid_argument("to_modes: x and p lengths differ");
    return ModeState{basis.apply(s.x), basis.apply(s.p), s.t};
}

inline PhaseState from_modes(const ModeState& m, const ModeBasis& basis)
{
    if (m.q.size() != m.p.size())
        throw std::invalid_argument("from_modes: Q and P lengths differ");
    return PhaseState{basis.apply(m.q), basis.apply(m.p), m.t};
}

/// Harmonic mode energies E_k = (P_k^2 + w_k^2 Q_k^2) / 2.
inline Eigen::VectorXd mode_energies(const ModeState& m, const ModeBasis& basis)
{
    if (static_cast<std::size_t>(m.q.size()) != basis.size() || m.p.size() != m.q.size())
        throw std::invalid_argument("mode_energies: dimension mismatch");
    const auto& w = basis.frequencies();
    return 0.5 * (m.p.array().square() + w.array().square() * m.q.array().square()).matrix();
}

/// Mode accelerations for the first M modes with modes M+1..N pinned at zero:
/// pad, map to real space, evaluate the lattice force, map back, truncate.
inline Eigen::VectorXd truncated_mode_rhs(const Eigen::Ref<const Eigen::VectorXd>& q_active,
                                          const ModeBasis& basis, const LatticeModel& model)
{
    const auto n = basis.size();
    const auto m = static_cast<std::size_t>(q_active.size());
    if (m < 1 || m > n)
        throw std::invalid_argument("truncated_mode_rhs: active mode count " + std::to_string(m)
                                    + " outside [1, " + std::to_string(n) + "]");
    if (model.size() != n)
        throw std::invalid_argument("truncated_mode_rhs: basis and model sizes differ");
    Eigen::VectorXd q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    q.head(static_cast<Eigen::Index>(m)) = q_active;
    const Eigen::VectorXd x = basis.apply(q);
    Eigen::VectorXd acc(x.size());
    accelerations(model, x, acc);
    return basis.apply(acc).head(static_cast<Eigen::Index>(m));
}

/// Two-mode quadratic coefficients. The nonlinear parts of the mode-1 and
/// mode-2 accelerations are eps*(a1 Q1^2 + a2 Q2^2 + a3 Q1 Q2) and
/// eps*(b1 Q1^2 + b2 Q2^2 + b3 Q1 Q2), with eps = w2 - 2 w1.
struct QuadraticCoefficients {
    double a1 = 0, a2 = 0, a3 = 0;
    double b1 = 0, b2 = 0, b3 = 0;
    double epsilon = 0;
    double omega1 = 0, omega2 = 0;
    double a_tilde = 0;
    double b_tilde = 0;

    /// Nonlinear accelerations (mode 1, mode 2) at (q1, q2).
    std::pair<double, double> nonlinear(double q1, double q2) const
    {
        return {epsilon * (a1 * q1 * q1 + a2 * q2 * q2 + a3 * q1 * q2),
                epsilon * (b1 * q1 * q1 + b2 * q2 * q2 + b3 * q1 * q2)};
    }
};

inline QuadraticCoefficients extract_quadratic_coefficients(const LatticeModel& model, const ModeBasis& basis)
{
    if (basis.size() < 2)
        throw std::invalid_argument("extract_quadratic_coefficients: need at least two modes");
    if (model.size() != basis.size())
        throw std::invalid_argument("extract_quadratic_coefficients: basis and model sizes differ");
    QuadraticCoefficients c;
    c.omega1 = basis.frequency(0);
    c.omega2 = basis.frequency(1);
    c.epsilon = c.omega2 - 2.0 * c.omega1;
    if (c.epsilon == 0.0 || !std::isfinite(c.epsilon))
        throw std::domain_error("extract_quadratic_coefficients: zero detuning");

    const double w1sq = c.omega1 * c.omega1;
    const double w2sq = c.omega2 * c.omega2;
    auto nonlinear_at = [&](double q1, double q2) {
        Eigen::Vector2d q(q1, q2);
        Eigen::VectorXd acc = truncated_mode_rhs(q, basis, model);
        return Eigen::Vector2d(acc[0] + w1sq * q1, acc[1] + w2sq * q2);
    };
    const Eigen::Vector2d f10 = nonlinear_at(1.0, 0.0);
    const Eigen::Vector2d f01 = nonlinear_at(0.0, 1.0);
    const Eigen::Vector2d f11 = nonlinear_at(1.0, 1.0);
    const Eigen::Vector2d cross = f11 - f10 - f01;

    c.a1 = f10[0] / c.epsilon;
    c.a2 = f01[0] / c.epsilon;
    c.a3 = cross[0] / c.epsilon;
    c.b1 = f10[1] / c.epsilon;
    c.b2 = f01[1] / c.epsilon;
    c.b3 = cross[1] / c.epsilon;
    c.a_tilde = c.a3 / (2.0 * c.omega1);
    c.b_tilde = c.b1 / (2.0 * c.omega2);
    return c;
}

} // namespace fput

#endif // FPUT_NORMAL_MODES_HPP
