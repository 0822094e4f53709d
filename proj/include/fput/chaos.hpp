#ifndef FPUT_CHAOS_HPP
#define FPUT_CHAOS_HPP

/** @file
 * Chaos indicators along lattice trajectories: the maximum Lyapunov exponent
 * (mLE) from a renormalised deviation vector and the Smaller Alignment Index
 * (SALI) from two of them, plus a threshold-based regular/chaotic verdict.
 *
 * Hamiltonian runs propagate deviations with the tangent map of the Yoshida
 * step; non-Hamiltonian runs integrate the augmented variational system with
 * DOP853. Norm growth is accumulated in log space at every renormalisation.
 */

#include "fput/dop853.hpp"
#include "fput/integrators.hpp"
#include "fput/lattice.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fput {

enum class IndicatorKind { MLE, SALI };

struct IndicatorSeries {
    std::vector<double> times;
    std::vector<double> values;
    IndicatorKind kind = IndicatorKind::MLE;

    bool empty() const { return times.empty(); }
    double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

enum class ChaosLabel { Regular, Chaotic, Undetermined };

inline const char* to_string(ChaosLabel l)
{
    switch (l) {
    case ChaosLabel::Regular: return "regular";
    case ChaosLabel::Chaotic: return "chaotic";
    case ChaosLabel::Undetermined: return "undetermined";
    }
    return "unknown";
}

struct ChaosVerdict {
    ChaosLabel label = ChaosLabel::Undetermined;
    double mle_final = 0.0;
    double sali_final = 0.0;
    double horizon = 0.0;
    double mle_slope = 0.0;   ///< log-log slope of the mLE envelope over the final decade
    bool mle_plateau = false;
};

struct ChaosThresholds {
    double sali_chaotic = 1e-8;
    double sali_regular = 1e-4;
    double plateau_factor = 3.0;
    double regular_slope = -0.8;
};

struct ChaosOptions {
    double t_final = 1e6;
    double renorm_interval = 1.0;
    double dt = 0.01;                 ///< symplectic path step
    AdaptiveOptions adaptive{};       ///< non-Hamiltonian path
    int samples_per_decade = 50;
    double first_sample = 1.0;
    double escape_radius = 1e6;
    double sali_floor = 1e-16;        ///< SALI values below this are recorded as the floor
    double sali_stop = 0.0;           ///< stop once SALI drops below this (0 disables)

    void validate() const
    {
        if (!(t_final > 0.0) || !(renorm_interval > 0.0) || !(dt > 0.0))
            throw std::invalid_argument("chaos options: horizon, renormalisation interval and dt must be positive");
        if (samples_per_decade < 1 || !(first_sample > 0.0) || first_sample > t_final)
            throw std::invalid_argument("chaos options: invalid sampling settings");
    }
};

/// Outcome of one indicator run. Series stop at end_time; a blown-up run has
/// truncated series.
struct IndicatorRun {
    IndicatorSeries mle{{}, {}, IndicatorKind::MLE};
    IndicatorSeries sali{{}, {}, IndicatorKind::SALI};
    RunStatus status = RunStatus::Completed;
    double end_time = 0.0;
    std::optional<double> blowup_time;
};

inline double sali_value(const Eigen::Ref<const Eigen::VectorXd>& w1, const Eigen::Ref<const Eigen::VectorXd>& w2)
{
    const Eigen::VectorXd u1 = w1 / w1.norm();
    const Eigen::VectorXd u2 = w2 / w2.norm();
    return std::min((u1 - u2).norm(), (u1 + u2).norm());
}

/// Seeded random unit vector, components uniform in [-1, 1] before scaling.
inline Eigen::VectorXd random_unit_vector(Eigen::Index dim, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd v(dim);
    do {
        for (Eigen::Index i = 0; i < dim; ++i)
            v[i] = u(gen);
    } while (v.norm() == 0.0);
    return v.normalized();
}

/// Two seeded random vectors, Gram-Schmidt orthonormalised.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> random_orthonormal_pair(Eigen::Index dim, std::uint64_t seed)
{
    if (dim < 2)
        throw std::invalid_argument("orthonormal pair needs dimension >= 2");
    Eigen::VectorXd a = random_unit_vector(dim, seed);
    for (std::uint64_t k = 1;; ++k) {
        Eigen::VectorXd b = random_unit_vector(dim, seed + 0x9e3779b97f4a7c15ULL * k);
        b -= a.dot(b) * a;
        if (b.norm() > 1e-8)
            return {a, b.normalized()};
    }
}

namespace detail {

class LogSampler {
public:
    // Times are rounded up onto the grid k*grid so that the fixed-step and
    // adaptive paths record at identical instants.
    LogSampler(double first, double last, int per_decade, double grid)
    {
        const double ratio = std::pow(10.0, 1.0 / per_decade);
        for (double t = first; t < last * (1.0 - 1e-12); t *= ratio) {
            const double snapped = std::ceil(t / grid - 1e-9) * grid;
            if (snapped >= last * (1.0 - 1e-12))
                break;
            if (times_.empty() || snapped > times_.back())
                times_.push_back(snapped);
        }
        times_.push_back(last);
    }
    bool due(double t) const { return next_ < times_.size() && t >= times_[next_] * (1.0 - 1e-12); }
    void advance(double t)
    {
        while (next_ < times_.size() && t >= times_[next_] * (1.0 - 1e-12))
            ++next_;
    }
    double next_time() const { return next_ < times_.size() ? times_[next_] : times_.back(); }

private:
    std::vector<double> times_;
    std::size_t next_ = 0;
};

// Bookkeeping shared by both propagation paths. Columns of the deviation
// matrix are kept at unit norm after each renormalisation; log_growth holds
// the accumulated log of the first column's stretching.
struct IndicatorAccumulator {
    double log_growth = 0.0;
    bool two_vectors = false;
    IndicatorRun run;
    LogSampler sampler;
    const ChaosOptions* opts;

    IndicatorAccumulator(const ChaosOptions& o, bool two)
        : two_vectors(two), sampler(o.first_sample, o.t_final, o.samples_per_decade, o.dt), opts(&o)
    {
    }

    template <class Cols>
    void renormalise(Cols&& devs)
    {
        const double n1 = devs.col(0).norm();
        log_growth += std::log(n1);
        devs.col(0) /= n1;
        if (two_vectors)
            devs.col(1).normalize();
    }

    // Returns true when the run should stop early on the SALI criterion.
    template <class Cols>
    bool record(double t, const Cols& devs)
    {
        if (!sampler.due(t))
            return false;
        sampler.advance(t);
        const double lambda = (log_growth + std::log(devs.col(0).norm())) / t;
        run.mle.times.push_back(t);
        run.mle.values.push_back(lambda);
        if (!two_vectors)
            return false;
        const double s = std::max(sali_value(devs.col(0), devs.col(1)), opts->sali_floor);
        run.sali.times.push_back(t);
        run.sali.values.push_back(s);
        return opts->sali_stop > 0.0 && s < opts->sali_stop;
    }
};

inline Eigen::MatrixXd initial_deviations(std::span<const Eigen::VectorXd> devs, Eigen::Index n)
{
    if (devs.empty() || devs.size() > 2)
        throw std::invalid_argument("indicator runs take one or two deviation vectors");
    Eigen::MatrixXd m(2 * n, static_cast<Eigen::Index>(devs.size()));
    for (std::size_t j = 0; j < devs.size(); ++j) {
        if (devs[j].size() != 2 * n)
            throw std::invalid_argument("deviation vectors must have length 2N");
        const double nrm = devs[j].norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            throw std::invalid_argument("deviation vectors must be nonzero and finite");
        m.col(static_cast<Eigen::Index>(j)) = devs[j] / nrm;
    }
    if (m.cols() == 2 && sali_value(m.col(0), m.col(1)) < 1e-12)
        throw std::invalid_argument("SALI needs linearly independent deviation vectors");
    return m;
}

inline IndicatorRun run_symplectic(const LatticeModel& model, const PhaseState& initial, Eigen::MatrixXd devs,
                                   const ChaosOptions& o)
{
    const auto n = static_cast<Eigen::Index>(model.size());
    IndicatorAccumulator acc(o, devs.cols() == 2);
    SymplecticStepper stepper(model);
    Eigen::VectorXd x = initial.x, p = initial.p;
    const long long renorm_steps = std::max<long long>(1, std::llround(o.renorm_interval / o.dt));
    const long long total = std::llround(std::ceil(o.t_final / o.dt - 1e-9));
    double t = 0.0;
    for (long long k = 1; k <= total; ++k) {
        stepper.step(x, p, devs, o.dt);
        t = static_cast<double>(k) * o.dt;
        if (escaped(x, o.escape_radius) || !p.allFinite()) {
            acc.run.status = RunStatus::BlownUp;
            acc.run.blowup_time = t;
            break;
        }
        if (k % renorm_steps == 0)
            acc.renormalise(devs);
        if (acc.record(t, devs))
            break;
    }
    (void)n;
    acc.run.end_time = t;
    return std::move(acc.run);
}

inline IndicatorRun run_adaptive(const LatticeModel& model, const PhaseState& initial, const Eigen::MatrixXd& devs0,
                                 const ChaosOptions& o)
{
    const auto n = static_cast<Eigen::Index>(model.size());
    const auto k = devs0.cols();
    IndicatorAccumulator acc(o, k == 2);
    Eigen::VectorXd z(2 * n * (k + 1));
    z.head(n) = initial.x;
    z.segment(n, n) = initial.p;
    for (Eigen::Index j = 0; j < k; ++j)
        z.segment(2 * n * (j + 1), 2 * n) = devs0.col(j);
    auto devs = [&]() { return Eigen::Map<Eigen::MatrixXd>(z.data() + 2 * n, 2 * n, k); };

    Dop853 stepper(VariationalVectorField{&model}, z.size(), o.adaptive);
    double t = 0.0;
    stepper.reset(t, z);
    long long renorm_index = 1;
    double next_renorm = o.renorm_interval;
    while (t < o.t_final) {
        const double target = std::min({o.t_final, acc.sampler.next_time(), next_renorm});
        if (stepper.step(t, z, target) == StepOutcome::Underflow) {
            const bool esc = state_escaped(z.head(2 * n), n, o.escape_radius);
            acc.run.status = esc ? RunStatus::BlownUp : RunStatus::Failed;
            if (esc)
                acc.run.blowup_time = t;
            break;
        }
        if (state_escaped(z.head(2 * n), n, o.escape_radius)) {
            acc.run.status = RunStatus::BlownUp;
            acc.run.blowup_time = t;
            break;
        }
        if (t >= next_renorm) {
            acc.renormalise(devs());
            while (next_renorm <= t)
                next_renorm = static_cast<double>(++renorm_index) * o.renorm_interval;
            stepper.reset(t, z);
        }
        if (acc.record(t, devs()))
            break;
    }
    acc.run.end_time = t;
    return std::move(acc.run);
}

} // namespace detail

/// mLE and (with two vectors) SALI along one trajectory from t = 0. The first
/// deviation vector drives the mLE.
inline IndicatorRun compute_indicators(const LatticeModel& model, const PhaseState& initial,
                                       std::span<const Eigen::VectorXd> deviations, const ChaosOptions& opts)
{
    opts.validate();
    detail::check_size(model, initial.x.size(), "compute_indicators");
    detail::check_size(model, initial.p.size(), "compute_indicators momenta");
    if (!initial.x.allFinite() || !initial.p.allFinite())
        throw std::invalid_argument("compute_indicators: non-finite initial state");
    Eigen::MatrixXd devs = detail::initial_deviations(deviations, static_cast<Eigen::Index>(model.size()));
    return model.is_hamiltonian() ? detail::run_symplectic(model, initial, std::move(devs), opts)
                                  : detail::run_adaptive(model, initial, devs, opts);
}

inline IndicatorSeries mle(const LatticeModel& model, const PhaseState& initial, const Eigen::VectorXd& w0,
                           double t_final, double renorm_interval, ChaosOptions opts = {})
{
    opts.t_final = t_final;
    opts.renorm_interval = renorm_interval;
    std::array<Eigen::VectorXd, 1> devs{w0};
    auto run = compute_indicators(model, initial, devs, opts);
    if (run.status == RunStatus::Failed)
        throw std::runtime_error("mle: integration failed at t = " + std::to_string(run.end_time));
    return std::move(run.mle);
}

inline IndicatorSeries sali(const LatticeModel& model, const PhaseState& initial, const Eigen::VectorXd& w1,
                            const Eigen::VectorXd& w2, double t_final, ChaosOptions opts = {})
{
    opts.t_final = t_final;
    std::array<Eigen::VectorXd, 2> devs{w1, w2};
    auto run = compute_indicators(model, initial, devs, opts);
    if (run.status == RunStatus::Failed)
        throw std::runtime_error("sali: integration failed at t = " + std::to_string(run.end_time));
    return std::move(run.sali);
}

/// Upper envelope of |lambda(t)| * t, divided by t: the running maximum of
/// the accumulated log stretching. For bounded deviation growth it follows
/// 1/t exactly; for exponential growth it tends to the exponent.
inline std::vector<double> mle_envelope(const IndicatorSeries& s)
{
    std::vector<double> env(s.values.size());
    double running = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        running = std::max(running, std::abs(s.values[i]) * s.times[i]);
        env[i] = running / s.times[i];
    }
    return env;
}

/// Least-squares slope of log10(envelope) against log10(t) for t in [t_lo, t_hi].
inline double mle_loglog_slope(const IndicatorSeries& s, double t_lo, double t_hi)
{
    const auto env = mle_envelope(s);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < env.size(); ++i) {
        if (s.times[i] < t_lo || s.times[i] > t_hi || !(env[i] > 0.0))
            continue;
        const double lx = std::log10(s.times[i]);
        const double ly = std::log10(env[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++cnt;
    }
    if (cnt < 2)
        return std::numeric_limits<double>::quiet_NaN();
    const double den = cnt * sxx - sx * sx;
    return den > 0.0 ? (cnt * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN();
}

/// Regular / chaotic verdict from the final decade of both series.
inline ChaosVerdict classify(const IndicatorSeries& mle_series, const IndicatorSeries& sali_series,
                             const ChaosThresholds& th = {})
{
    ChaosVerdict v;
    if (mle_series.empty() || sali_series.empty())
        return v;
    v.horizon = mle_series.horizon();
    v.mle_final = mle_series.values.back();
    v.sali_final = sali_series.values.back();

    const double lo = v.horizon / 10.0;
    double mean_lambda = 0.0, mean_inv_t = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < mle_series.times.size(); ++i) {
        if (mle_series.times[i] < lo)
            continue;
        mean_lambda += mle_series.values[i];
        mean_inv_t += 1.0 / mle_series.times[i];
        ++cnt;
    }
    if (cnt > 0) {
        mean_lambda /= cnt;
        mean_inv_t /= cnt;
    }
    v.mle_plateau = cnt > 0 && mean_lambda > th.plateau_factor * mean_inv_t;
    v.mle_slope = mle_loglog_slope(mle_series, lo, v.horizon);

    if (v.sali_final < th.sali_chaotic && v.mle_plateau)
        v.label = ChaosLabel::Chaotic;
    else if (v.sali_final > th.sali_regular && std::isfinite(v.mle_slope) && v.mle_slope <= th.regular_slope)
        v.label = ChaosLabel::Regular;
    else
        v.label = ChaosLabel::Undetermined;
    return v;
}

} // namespace fput

#endif // FPUT_CHAOS_HPP
