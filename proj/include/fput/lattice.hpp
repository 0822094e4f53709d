#ifndef FPUT_LATTICE_HPP
#define FPUT_LATTICE_HPP

/** @file
 * FPUT-alpha chain with fixed ends: the homogeneous Hamiltonian model and the
 * variant with random variability in the nonlinear coupling only.
 *
 * Particle j = 1..N is stored at index j-1. The walls x_0 = x_{N+1} = 0 are
 * implicit; disorder profiles carry N+2 entries so that v_0 and v_{N+1} have a
 * slot, although they only ever multiply a wall displacement.
 */

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fput {

enum class Variant { Homogeneous, DisorderedNonlinear };

inline const char* to_string(Variant v)
{
    return v == Variant::Homogeneous ? "homogeneous" : "disordered";
}

/// Multiplicative variability v_0..v_{N+1} and the tolerance it was drawn at.
struct DisorderProfile {
    std::vector<double> values;
    double tolerance_percent = 0.0;
    std::uint64_t seed = 0;

    static DisorderProfile unit(std::size_t n)
    {
        return DisorderProfile{std::vector<double>(n + 2, 1.0), 0.0, 0};
    }
};

/// Real-space phase point. Non-finite entries mean the run has blown up.
struct PhaseState {
    Eigen::VectorXd x;
    Eigen::VectorXd p;
    double t = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(x.size()); }

    /// (x, p) stacked into one 2N vector.
    Eigen::VectorXd stacked() const
    {
        Eigen::VectorXd z(x.size() + p.size());
        z << x, p;
        return z;
    }

    static PhaseState from_stacked(const Eigen::Ref<const Eigen::VectorXd>& z, double t)
    {
        if (z.size() % 2 != 0)
            throw std::invalid_argument("stacked phase vector must have even length");
        const auto n = z.size() / 2;
        return PhaseState{z.head(n), z.tail(n), t};
    }
};

class LatticeModel;
LatticeModel build_lattice(std::size_t n, double alpha, DisorderProfile disorder, Variant variant);

class LatticeModel {
public:
    std::size_t size() const { return n_; }
    double alpha() const { return alpha_; }
    Variant variant() const { return variant_; }
    const DisorderProfile& disorder() const { return disorder_; }
    bool is_hamiltonian() const { return variant_ == Variant::Homogeneous; }

private:
    friend LatticeModel build_lattice(std::size_t, double, DisorderProfile, Variant);
    LatticeModel(std::size_t n, double alpha, DisorderProfile d, Variant v)
        : n_(n), alpha_(alpha), disorder_(std::move(d)), variant_(v)
    {
    }

    std::size_t n_;
    double alpha_;
    DisorderProfile disorder_;
    Variant variant_;
};

/// Validates parameters and builds a model. The homogeneous variant always
/// carries unit disorder, whatever profile was passed in.
inline LatticeModel build_lattice(std::size_t n, double alpha, DisorderProfile disorder, Variant variant)
{
    if (n < 1)
        throw std::invalid_argument("lattice needs at least one particle");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("alpha must be finite and non-negative");
    if (variant == Variant::Homogeneous)
        return LatticeModel(n, alpha, DisorderProfile::unit(n), variant);

    if (disorder.values.size() != n + 2)
        throw std::invalid_argument("disorder profile must have n+2 entries, got "
                                    + std::to_string(disorder.values.size()));
    const double tau = disorder.tolerance_percent;
    if (!(tau >= 0.0))
        throw std::invalid_argument("tolerance must be non-negative");
    const double lo = 1.0 - 0.01 * tau;
    const double hi = 1.0 + 0.01 * tau;
    for (double v : disorder.values) {
        if (!(v >= lo && v <= hi))
            throw std::invalid_argument("disorder value " + std::to_string(v)
                                        + " outside tolerance interval");
    }
    if (disorder.values.front() != 1.0 || disorder.values.back() != 1.0)
        throw std::invalid_argument("boundary disorder entries must equal 1");
    return LatticeModel(n, alpha, std::move(disorder), variant);
}

namespace detail {

inline void check_size(const LatticeModel& m, Eigen::Index len, const char* what)
{
    if (static_cast<std::size_t>(len) != m.size())
        throw std::invalid_argument(std::string(what) + ": expected length "
                                    + std::to_string(m.size()) + ", got " + std::to_string(len));
}

// Shared kernel. With v == 1 the disordered branch performs exactly the same
// floating-point operations as the homogeneous one.
template <bool Disordered>
inline void accelerations_kernel(std::size_t n, double alpha, const double* v, const double* x, double* out)
{
    double dl = x[0];
    double yl = Disordered ? v[1] * x[0] - v[0] * 0.0 : dl;
    for (std::size_t j = 0; j < n; ++j) {
        const double xr = j + 1 < n ? x[j + 1] : 0.0;
        const double dr = xr - x[j];
        const double yr = Disordered ? v[j + 2] * xr - v[j + 1] * x[j] : dr;
        out[j] = (dr + alpha * yr * yr) - (dl + alpha * yl * yl);
        dl = dr;
        yl = yr;
    }
}

// out = K(x) dx with K the Jacobian of the accelerations. Tridiagonal.
template <bool Disordered>
inline void force_jacobian_kernel(std::size_t n, double alpha, const double* v, const double* x,
                                  const double* dx, double* out)
{
    double dl = dx[0];
    double yl = Disordered ? v[1] * x[0] : x[0];
    double dyl = Disordered ? v[1] * dx[0] : dx[0];
    for (std::size_t j = 0; j < n; ++j) {
        const double xr = j + 1 < n ? x[j + 1] : 0.0;
        const double dxr = j + 1 < n ? dx[j + 1] : 0.0;
        const double ddr = dxr - dx[j];
        const double yr = Disordered ? v[j + 2] * xr - v[j + 1] * x[j] : xr - x[j];
        const double dyr = Disordered ? v[j + 2] * dxr - v[j + 1] * dx[j] : ddr;
        out[j] = (ddr + 2.0 * alpha * yr * dyr) - (dl + 2.0 * alpha * yl * dyl);
        dl = ddr;
        yl = yr;
        dyl = dyr;
    }
}

} // namespace detail

/// Accelerations for either variant, written into `out`. No allocation.
inline void accelerations(const LatticeModel& m, const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::Ref<Eigen::VectorXd> out)
{
    detail::check_size(m, x.size(), "accelerations");
    detail::check_size(m, out.size(), "accelerations output");
    const double* v = m.disorder().values.data();
    if (m.variant() == Variant::Homogeneous)
        detail::accelerations_kernel<false>(m.size(), m.alpha(), v, x.data(), out.data());
    else
        detail::accelerations_kernel<true>(m.size(), m.alpha(), v, x.data(), out.data());
}

/// out = (d accel / d x) * dx, the position block of the variational flow.
inline void force_jacobian_apply(const LatticeModel& m, const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const Eigen::Ref<const Eigen::VectorXd>& dx, Eigen::Ref<Eigen::VectorXd> out)
{
    detail::check_size(m, x.size(), "force_jacobian_apply");
    detail::check_size(m, dx.size(), "force_jacobian_apply deviation");
    detail::check_size(m, out.size(), "force_jacobian_apply output");
    const double* v = m.disorder().values.data();
    if (m.variant() == Variant::Homogeneous)
        detail::force_jacobian_kernel<false>(m.size(), m.alpha(), v, x.data(), dx.data(), out.data());
    else
        detail::force_jacobian_kernel<true>(m.size(), m.alpha(), v, x.data(), dx.data(), out.data());
}

inline Eigen::VectorXd rhs_homogeneous(const PhaseState& s, const LatticeModel& m)
{
    if (m.variant() != Variant::Homogeneous)
        throw std::invalid_argument("rhs_homogeneous called on a disordered model");
    detail::check_size(m, s.x.size(), "rhs_homogeneous");
    Eigen::VectorXd out(s.x.size());
    accelerations(m, s.x, out);
    return out;
}

inline Eigen::VectorXd rhs_disordered(const PhaseState& s, const LatticeModel& m)
{
    if (m.variant() != Variant::DisorderedNonlinear)
        throw std::invalid_argument("rhs_disordered called on a homogeneous model");
    detail::check_size(m, s.x.size(), "rhs_disordered");
    Eigen::VectorXd out(s.x.size());
    accelerations(m, s.x, out);
    return out;
}

/// Total energy H(x, p). Only the homogeneous model has one.
inline double total_energy(const PhaseState& s, const LatticeModel& m)
{
    if (!m.is_hamiltonian())
        throw std::invalid_argument("total_energy: the disordered model is not Hamiltonian");
    detail::check_size(m, s.x.size(), "total_energy");
    detail::check_size(m, s.p.size(), "total_energy momenta");
    const auto n = m.size();
    const double a3 = m.alpha() / 3.0;
    double kinetic = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        kinetic += s.p[j] * s.p[j];
    double potential = 0.0;
    double xl = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double xr = j < n ? s.x[j] : 0.0;
        const double d = xr - xl;
        potential += 0.5 * d * d + a3 * d * d * d;
        xl = xr;
    }
    return 0.5 * kinetic + potential;
}

/// Jacobian of the first-order flow (x' = p, p' = accel(x)) as a dense 2N x 2N
/// matrix [[0, I], [K(x), 0]].
inline Eigen::MatrixXd jacobian_rhs(const PhaseState& s, const LatticeModel& m)
{
    detail::check_size(m, s.x.size(), "jacobian_rhs");
    detail::check_size(m, s.p.size(), "jacobian_rhs momenta");
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    jac.topRightCorner(n, n).setIdentity();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd col(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        e[k] = 1.0;
        force_jacobian_apply(m, s.x, e, col);
        jac.block(n, k, n, 1) = col;
        e[k] = 0.0;
    }
    return jac;
}

/// Lowest normal mode excited: x_j = sin(pi j / (N+1)), p = 0.
inline PhaseState initial_condition_mode1(std::size_t n)
{
    if (n < 1)
        throw std::invalid_argument("initial_condition_mode1: n must be positive");
    PhaseState s{Eigen::VectorXd(n), Eigen::VectorXd::Zero(n), 0.0};
    const double h = std::numbers::pi / static_cast<double>(n + 1);
    for (std::size_t j = 0; j < n; ++j)
        s.x[j] = std::sin(h * static_cast<double>(j + 1));
    return s;
}

/// True once any displacement is non-finite or beyond the escape radius.
inline bool escaped(const Eigen::Ref<const Eigen::VectorXd>& x, double escape_radius)
{
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double a = std::abs(x[j]);
        if (!std::isfinite(a) || a > escape_radius)
            return true;
    }
    return false;
}

} // namespace fput

#endif // FPUT_LATTICE_HPP
