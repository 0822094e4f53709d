#ifndef FPUT_EXPERIMENTS_HPP
#define FPUT_EXPERIMENTS_HPP

/** @file
 * Ensemble drivers: disorder sampling, coefficient sweeps with the quadratic
 * fit for the sign change of mean B, recurrence peak analysis of the
 * mode-1 energy, and the chaotic-fraction scan.
 *
 * Every realization gets its own seed from a counter-based split of the
 * master seed, so results do not depend on the order or the thread in which
 * realizations run. Aggregation is always in realization order.
 */

#include "fput/chaos.hpp"
#include "fput/integrators.hpp"
#include "fput/lattice.hpp"
#include "fput/normal_modes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fput {

/// splitmix64 finaliser.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of stream `index` under `parent`.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index)
{
    return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// v_1..v_N ~ Normal(1, tau/300), redrawn until inside [1 - tau/100, 1 + tau/100];
/// the wall entries v_0, v_{N+1} are 1.
inline DisorderProfile sample_disorder(double tau, std::size_t n, std::uint64_t seed)
{
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("sample_disorder: tau must be finite and non-negative");
    DisorderProfile d = DisorderProfile::unit(n);
    d.tolerance_percent = tau;
    d.seed = seed;
    if (tau == 0.0)
        return d;
    const double lo = 1.0 - 0.01 * tau, hi = 1.0 + 0.01 * tau;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(1.0, 0.01 * tau / 3.0);
    for (std::size_t j = 1; j <= n; ++j) {
        double v;
        do {
            v = normal(gen);
        } while (v < lo || v > hi);
        d.values[j] = v;
    }
    return d;
}

/// Runs f(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all threads join.
inline void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& f)
{
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    for (unsigned w = 0; w < nthreads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Coefficient sweep and threshold fit
// ---------------------------------------------------------------------------

struct EnsembleSpec {
    std::vector<double> tau_grid{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    std::size_t realizations = 100;
    std::size_t n_particles = 64;
    std::uint64_t master_seed = 1;

    void validate() const
    {
        if (realizations < 1)
            throw std::invalid_argument("ensemble: realizations must be >= 1");
        if (tau_grid.empty())
            throw std::invalid_argument("ensemble: empty tau grid");
        for (double t : tau_grid)
            if (!(t >= 0.0) || !std::isfinite(t))
                throw std::invalid_argument("ensemble: tau values must be finite and non-negative");
        if (n_particles < 2)
            throw std::invalid_argument("ensemble: need at least two particles");
    }
};

/// Realization r uses the same seed at every tau, so each realization traces
/// a smooth curve through the grid.
inline std::uint64_t realization_seed(std::uint64_t master, std::size_t r) { return derive_seed(master, r); }

struct SweepRow {
    double tau = 0.0;
    double mean_a = 0.0, sd_a = 0.0;
    double mean_b = 0.0, sd_b = 0.0;
    std::size_t count = 0;          ///< successful extractions
    std::size_t failures = 0;
    std::vector<std::string> errors;
};

inline std::vector<SweepRow> coefficient_sweep(const EnsembleSpec& spec, double alpha, unsigned workers = 1)
{
    spec.validate();
    const ModeBasis basis = mode_basis(spec.n_particles);
    std::vector<SweepRow> rows;
    for (double tau : spec.tau_grid) {
        struct Slot {
            std::optional<QuadraticCoefficients> c;
            std::string error;
        };
        std::vector<Slot> slots(spec.realizations);
        parallel_for(spec.realizations, workers, [&](std::size_t r) {
            try {
                const auto seed = realization_seed(spec.master_seed, r);
                const auto variant = tau == 0.0 ? Variant::Homogeneous : Variant::DisorderedNonlinear;
                const auto model = build_lattice(spec.n_particles, alpha, sample_disorder(tau, spec.n_particles, seed),
                                                 variant);
                slots[r].c = extract_quadratic_coefficients(model, basis);
            } catch (const std::exception& e) {
                slots[r].error = e.what();
            }
        });
        SweepRow row;
        row.tau = tau;
        std::vector<double> as, bs;
        for (std::size_t r = 0; r < slots.size(); ++r) {
            if (slots[r].c) {
                as.push_back(slots[r].c->a_tilde);
                bs.push_back(slots[r].c->b_tilde);
            } else {
                ++row.failures;
                row.errors.push_back("realization " + std::to_string(r) + ": " + slots[r].error);
            }
        }
        row.count = as.size();
        auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
            mean = sd = std::numeric_limits<double>::quiet_NaN();
            if (v.empty())
                return;
            double s = 0.0;
            for (double x : v)
                s += x;
            mean = s / static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v)
                ss += (x - mean) * (x - mean);
            sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        };
        stats(as, row.mean_a, row.sd_a);
        stats(bs, row.mean_b, row.sd_b);
        rows.push_back(std::move(row));
    }
    return rows;
}

struct RegressionResult {
    double c2 = 0.0, c1 = 0.0, c0 = 0.0;   ///< y ~ c2 tau^2 + c1 tau + c0
    double sse = 0.0;
    double tau_c = std::numeric_limits<double>::quiet_NaN();
    bool extrapolated = false;   ///< root beyond the largest grid value
};

/// Smallest positive real root of c2 x^2 + c1 x + c0, if any.
inline std::optional<double> smallest_positive_root(double c2, double c1, double c0)
{
    std::vector<double> roots;
    if (c2 == 0.0) {
        if (c1 != 0.0)
            roots.push_back(-c0 / c1);
    } else {
        const double disc = c1 * c1 - 4.0 * c2 * c0;
        if (disc < 0.0)
            return std::nullopt;
        // Cancellation-free pair.
        const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
        roots.push_back(q / c2);
        if (q != 0.0)
            roots.push_back(c0 / q);
    }
    std::optional<double> best;
    for (double r : roots)
        if (r > 0.0 && std::isfinite(r) && (!best || r < *best))
            best = r;
    return best;
}

/// Least-squares quadratic through (tau, mean B) and its positive root. The
/// root must fall inside the scanned range.
inline RegressionResult fit_tau_c(const std::vector<double>& taus, const std::vector<double>& values)
{
    if (taus.size() != values.size())
        throw std::invalid_argument("fit_tau_c: grid and values differ in length");
    if (taus.size() < 3)
        throw std::invalid_argument("fit_tau_c: need at least three grid points");
    const auto m = static_cast<Eigen::Index>(taus.size());
    Eigen::MatrixXd v(m, 3);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double t = taus[static_cast<std::size_t>(i)];
        v(i, 0) = t * t;
        v(i, 1) = t;
        v(i, 2) = 1.0;
        y[i] = values[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector3d coef = v.colPivHouseholderQr().solve(y);
    RegressionResult res;
    res.c2 = coef[0];
    res.c1 = coef[1];
    res.c0 = coef[2];
    res.sse = (v * coef - y).squaredNorm();
    const auto root = smallest_positive_root(res.c2, res.c1, res.c0);
    const auto [lo, hi] = std::minmax_element(taus.begin(), taus.end());
    // A short extrapolation past the grid is allowed (the crossing often sits
    // just beyond a 0..10 scan); anything further is not trusted.
    const double reach = *hi + 0.5 * (*hi - *lo);
    if (!root || *root < *lo || *root > reach)
        throw std::domain_error("fit_tau_c: no positive real root within the scanned range");
    res.tau_c = *root;
    res.extrapolated = *root > *hi;
    return res;
}

// ---------------------------------------------------------------------------
// Recurrence analysis
// ---------------------------------------------------------------------------

struct Peak {
    double t;
    double height;
    double prominence;
};

struct RecurrenceMetrics {
    std::vector<Peak> peaks;
    bool degradation = false;   ///< at least two peaks with strictly decreasing heights
};

/// Interior local maxima whose prominence is at least prominence_fraction *
/// reference_energy, counted once E1 has first fallen that far below its
/// starting value (the initial hump is not a recurrence). A constant series
/// has no peaks and no degradation.
inline RecurrenceMetrics recurrence_metrics(const std::vector<double>& times, const std::vector<double>& e1,
                                            double reference_energy, double prominence_fraction = 0.1)
{
    if (times.size() != e1.size())
        throw std::invalid_argument("recurrence_metrics: time and energy series differ in length");
    if (times.size() < 3)
        throw std::invalid_argument("recurrence_metrics: series too short to contain a recurrence");
    if (!(reference_energy > 0.0))
        throw std::invalid_argument("recurrence_metrics: reference energy must be positive");
    const double min_prom = prominence_fraction * reference_energy;
    const std::size_t n = e1.size();
    RecurrenceMetrics m;
    std::size_t start = 1;
    while (start < n && e1[start] > e1[0] - min_prom)
        ++start;
    for (std::size_t i = std::max<std::size_t>(start, 1); i + 1 < n; ++i) {
        if (!(e1[i] > e1[i - 1] && e1[i] >= e1[i + 1]))
            continue;
        // Topographic prominence: walk out to the nearest higher sample on
        // each side, tracking the lowest point in between.
        double left_min = e1[i], right_min = e1[i];
        std::size_t j = i;
        while (j > 0 && e1[j - 1] <= e1[i]) {
            --j;
            left_min = std::min(left_min, e1[j]);
        }
        const bool left_open = j == 0;
        j = i;
        while (j + 1 < n && e1[j + 1] <= e1[i]) {
            ++j;
            right_min = std::min(right_min, e1[j]);
        }
        const bool right_open = j + 1 == n;
        double base;
        if (left_open && right_open)
            base = std::min(left_min, right_min);
        else if (left_open)
            base = right_min;
        else if (right_open)
            base = left_min;
        else
            base = std::max(left_min, right_min);
        const double prom = e1[i] - base;
        if (prom >= min_prom)
            m.peaks.push_back({times[i], e1[i], prom});
    }
    if (m.peaks.size() >= 2) {
        m.degradation = true;
        for (std::size_t k = 1; k < m.peaks.size(); ++k)
            if (!(m.peaks[k].height < m.peaks[k - 1].height))
                m.degradation = false;
    }
    return m;
}

/// First peak reaching major_fraction of the reference energy after E1 has
/// first dropped below that level.
inline std::optional<Peak> first_major_recurrence(const std::vector<double>& times, const std::vector<double>& e1,
                                                  const RecurrenceMetrics& m, double reference_energy,
                                                  double major_fraction = 0.5)
{
    const double level = major_fraction * reference_energy;
    double t_drop = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < e1.size(); ++i)
        if (e1[i] < level) {
            t_drop = times[i];
            break;
        }
    for (const auto& p : m.peaks)
        if (p.t > t_drop && p.height >= level)
            return p;
    return std::nullopt;
}

struct ModeEnergySeries {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> energies;   ///< E_1..E_k at each time
    RunStatus status = RunStatus::Completed;
    std::optional<double> blowup_time;
};

/// Harmonic energies of the first `modes` normal modes along a full lattice run.
inline ModeEnergySeries lattice_mode_energies(const LatticeModel& model, const PhaseState& initial,
                                              const IntegratorConfig& config, std::size_t modes)
{
    const ModeBasis basis = mode_basis(model.size());
    const Trajectory tr = integrate_lattice(model, initial, config);
    ModeEnergySeries out;
    out.status = tr.status;
    out.blowup_time = tr.blowup_time;
    const auto n = static_cast<Eigen::Index>(model.size());
    const auto k = static_cast<Eigen::Index>(std::min(modes, model.size()));
    for (const auto& s : tr.samples) {
        const ModeState ms = to_modes(PhaseState{s.y.head(n), s.y.tail(n), s.t}, basis);
        out.times.push_back(s.t);
        out.energies.push_back(mode_energies(ms, basis).head(k));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chaotic fraction
// ---------------------------------------------------------------------------

struct ChaosRecord {
    std::size_t n = 0;
    std::size_t realization = 0;
    std::uint64_t seed = 0;
    ChaosVerdict verdict;
    RunStatus status = RunStatus::Completed;
    std::optional<double> blowup_time;
};

struct ChaosFractionRow {
    std::size_t n = 0;
    std::size_t chaotic = 0, regular = 0, undetermined = 0, blown_up = 0, failed = 0;
    double percent_chaotic = 0.0;       ///< of determined verdicts
    double percent_undetermined = 0.0;  ///< of all realizations
    std::vector<ChaosRecord> records;
};

struct ChaosScanSpec {
    std::vector<std::size_t> n_values{4, 8, 16, 32, 64};
    double tau = 10.0;
    std::size_t realizations = 30;
    double alpha = 0.25;
    std::uint64_t master_seed = 1;
    ChaosOptions options{};
    ChaosThresholds thresholds{};
    unsigned workers = 1;
};

/// Seed of realization r at lattice size n.
inline std::uint64_t chaos_seed(std::uint64_t master, std::size_t n, std::size_t r)
{
    return derive_seed(derive_seed(master, n), r);
}

/// One indicator run: disorder from the realization seed, the lowest-mode
/// start, deviation vectors from a derived seed. Blown-up and failed runs are
/// kept as Undetermined.
inline ChaosRecord chaos_realization(std::size_t n, std::size_t r, const ChaosScanSpec& spec)
{
    ChaosRecord rec;
    rec.n = n;
    rec.realization = r;
    rec.seed = chaos_seed(spec.master_seed, n, r);
    const auto variant = spec.tau == 0.0 ? Variant::Homogeneous : Variant::DisorderedNonlinear;
    const auto model = build_lattice(n, spec.alpha, sample_disorder(spec.tau, n, rec.seed), variant);
    const auto ic = initial_condition_mode1(n);
    const auto [w1, w2] = random_orthonormal_pair(static_cast<Eigen::Index>(2 * n), derive_seed(rec.seed, 1));
    const std::array<Eigen::VectorXd, 2> devs{w1, w2};
    const IndicatorRun run = compute_indicators(model, ic, devs, spec.options);
    rec.status = run.status;
    rec.blowup_time = run.blowup_time;
    if (run.status == RunStatus::Completed) {
        rec.verdict = classify(run.mle, run.sali, spec.thresholds);
    } else {
        rec.verdict.label = ChaosLabel::Undetermined;
        rec.verdict.horizon = run.end_time;
        if (!run.mle.empty()) {
            rec.verdict.mle_final = run.mle.values.back();
            rec.verdict.sali_final = run.sali.values.back();
        }
    }
    return rec;
}

inline std::vector<ChaosFractionRow> chaos_fraction(const ChaosScanSpec& spec)
{
    if (spec.realizations < 1)
        throw std::invalid_argument("chaos_fraction: realizations must be >= 1");
    if (spec.n_values.empty())
        throw std::invalid_argument("chaos_fraction: no lattice sizes given");
    for (auto n : spec.n_values)
        if (n < 2)
            throw std::invalid_argument("chaos_fraction: lattice sizes must be >= 2");
    spec.options.validate();

    // One flat task list so large and small lattices share the workers.
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    for (std::size_t i = 0; i < spec.n_values.size(); ++i)
        for (std::size_t r = 0; r < spec.realizations; ++r)
            tasks.emplace_back(i, r);
    std::vector<ChaosRecord> records(tasks.size());
    parallel_for(tasks.size(), spec.workers, [&](std::size_t k) {
        records[k] = chaos_realization(spec.n_values[tasks[k].first], tasks[k].second, spec);
    });

    std::vector<ChaosFractionRow> rows(spec.n_values.size());
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        auto& row = rows[tasks[k].first];
        row.n = spec.n_values[tasks[k].first];
        const auto& rec = records[k];
        if (rec.status == RunStatus::BlownUp)
            ++row.blown_up;
        if (rec.status == RunStatus::Failed)
            ++row.failed;
        switch (rec.verdict.label) {
        case ChaosLabel::Chaotic: ++row.chaotic; break;
        case ChaosLabel::Regular: ++row.regular; break;
        case ChaosLabel::Undetermined: ++row.undetermined; break;
        }
        row.records.push_back(rec);
    }
    for (auto& row : rows) {
        const auto determined = row.chaotic + row.regular;
        const auto total = determined + row.undetermined;
        row.percent_chaotic = determined > 0 ? 100.0 * static_cast<double>(row.chaotic) / static_cast<double>(determined)
                                             : std::numeric_limits<double>::quiet_NaN();
        row.percent_undetermined = 100.0 * static_cast<double>(row.undetermined) / static_cast<double>(total);
    }
    return rows;
}

} // namespace fput

#endif // FPUT_EXPERIMENTS_HPP
