// Command-line front end: one subcommand per experiment. Every run writes its
// CSV/JSON outputs plus manifest.toml, which can be fed back with --config.

#include "fput/chaos.hpp"
#include "fput/experiments.hpp"
#include "fput/integrators.hpp"
#include "fput/io.hpp"
#include "fput/lattice.hpp"
#include "fput/normal_modes.hpp"
#include "fput/two_mode.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef FPUT_VERSION
#define FPUT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kInvalidConfig = 2, kIntegrationFailed = 3, kBlowUp = 4 };

struct InvalidConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelOpts {
    std::size_t n = 64;
    double alpha = 0.25;
    double tau = 0.0;
    std::string variant = "auto";
};

struct IntegOpts {
    std::string integrator = "auto";
    fput::IntegratorConfig cfg;
};

struct Globals {
    std::uint64_t seed = 1;
    std::string output_dir;
    unsigned workers = 1;
};

void add_model_options(CLI::App* app, ModelOpts& m, bool with_n = true)
{
    if (with_n)
        app->add_option("--n", m.n, "number of particles")->check(CLI::PositiveNumber);
    app->add_option("--alpha", m.alpha, "quadratic coupling strength")->check(CLI::NonNegativeNumber);
    app->add_option("--tau", m.tau, "variability tolerance in percent")->check(CLI::NonNegativeNumber);
    app->add_option("--variant", m.variant, "auto, homogeneous or disordered")
        ->check(CLI::IsMember({"auto", "homogeneous", "disordered"}));
}

void add_integrator_options(CLI::App* app, IntegOpts& o, bool with_choice = true)
{
    if (with_choice)
        app->add_option("--integrator", o.integrator, "auto, yoshida or rk8")
            ->check(CLI::IsMember({"auto", "yoshida", "rk8"}));
    app->add_option("--dt", o.cfg.dt, "symplectic time step");
    app->add_option("--abs-tol", o.cfg.abs_tol, "adaptive absolute tolerance");
    app->add_option("--rel-tol", o.cfg.rel_tol, "adaptive relative tolerance");
    app->add_option("--initial-step", o.cfg.initial_step, "adaptive initial step");
    app->add_option("--safety", o.cfg.safety, "adaptive safety factor");
    app->add_option("--t-final", o.cfg.t_final, "integration horizon");
    app->add_option("--escape-radius", o.cfg.escape_radius, "blow-up threshold on max |x_j|");
    app->add_option("--output-stride", o.cfg.output_stride, "sampling interval of stored points");
}

fput::Variant resolve_variant(const ModelOpts& m)
{
    if (m.variant == "homogeneous") {
        if (m.tau != 0.0)
            throw InvalidConfig("variant homogeneous cannot carry a nonzero tau");
        return fput::Variant::Homogeneous;
    }
    if (m.variant == "disordered")
        return fput::Variant::DisorderedNonlinear;
    return m.tau == 0.0 ? fput::Variant::Homogeneous : fput::Variant::DisorderedNonlinear;
}

fput::LatticeModel make_model(const ModelOpts& m, std::uint64_t seed)
{
    const auto v = resolve_variant(m);
    auto disorder = fput::sample_disorder(m.tau, m.n, fput::realization_seed(seed, 0));
    return fput::build_lattice(m.n, m.alpha, std::move(disorder), v);
}

void check_integrator(const IntegOpts& o, const fput::LatticeModel& model)
{
    if (o.integrator == "yoshida" && !model.is_hamiltonian())
        throw InvalidConfig("the symplectic integrator needs the homogeneous (Hamiltonian) variant");
}

fput::Trajectory run_lattice(const IntegOpts& o, const fput::LatticeModel& model, const fput::PhaseState& ic)
{
    check_integrator(o, model);
    if (o.integrator == "rk8")
        return fput::integrate_adaptive_rk8(model, ic, o.cfg);
    return fput::integrate_lattice(model, ic, o.cfg);
}

std::string out_path(const Globals& g, const std::string& name) { return (fs::path(g.output_dir) / name).string(); }

void write_json(const Globals& g, const std::string& name, const json& j)
{
    auto f = fput::io::open_output(out_path(g, name));
    f << j.dump(2) << '\n';
}

json peak_json(const fput::Peak& p) { return {{"t", p.t}, {"height", p.height}, {"prominence", p.prominence}}; }

json verdict_json(const fput::ChaosRecord& r)
{
    json j{{"n", r.n},
           {"realization", r.realization},
           {"seed", r.seed},
           {"label", fput::to_string(r.verdict.label)},
           {"mle_final", r.verdict.mle_final},
           {"sali_final", r.verdict.sali_final},
           {"horizon", r.verdict.horizon},
           {"mle_slope", std::isfinite(r.verdict.mle_slope) ? json(r.verdict.mle_slope) : json(nullptr)},
           {"status", fput::to_string(r.status)}};
    if (r.blowup_time)
        j["blowup_time"] = *r.blowup_time;
    return j;
}

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------

int cmd_simulate(const Globals& g, const ModelOpts& m, const IntegOpts& o, std::size_t modes)
{
    const auto model = make_model(m, g.seed);
    const auto ic = fput::initial_condition_mode1(m.n);
    const auto tr = run_lattice(o, model, ic);
    {
        auto f = fput::io::open_output(out_path(g, "trajectory.csv"));
        fput::io::write_trajectory_csv(f, tr, m.n);
    }
    const auto basis = fput::mode_basis(m.n);
    const auto n = static_cast<Eigen::Index>(m.n);
    const auto k = static_cast<Eigen::Index>(std::min(modes, m.n));
    std::vector<double> times;
    std::vector<Eigen::VectorXd> energies;
    double max_rel_err = 0.0;
    const double e0 = model.is_hamiltonian() ? fput::total_energy(ic, model) : 0.0;
    for (const auto& s : tr.samples) {
        const fput::PhaseState ps{s.y.head(n), s.y.tail(n), s.t};
        times.push_back(s.t);
        energies.push_back(fput::mode_energies(fput::to_modes(ps, basis), basis).head(k));
        if (model.is_hamiltonian())
            max_rel_err = std::max(max_rel_err, std::abs(fput::total_energy(ps, model) - e0) / e0);
    }
    {
        auto f = fput::io::open_output(out_path(g, "mode_energies.csv"));
        fput::io::write_mode_energies_csv(f, times, energies);
    }
    json summary{{"status", fput::to_string(tr.status)}, {"end_time", tr.end_time}, {"variant", fput::to_string(model.variant())}};
    if (tr.blowup_time)
        summary["blowup_time"] = *tr.blowup_time;
    if (model.is_hamiltonian()) {
        summary["energy"] = e0;
        summary["max_relative_energy_error"] = max_rel_err;
    }
    write_json(g, "summary.json", summary);
    if (tr.status == fput::RunStatus::BlownUp) {
        std::cerr << "blow-up detected at t = " << *tr.blowup_time << '\n';
        return kBlowUp;
    }
    if (tr.status == fput::RunStatus::Failed) {
        std::cerr << "integration failed at t = " << tr.end_time << '\n';
        return kIntegrationFailed;
    }
    return kOk;
}

int cmd_mode_energies(const Globals& g, const ModelOpts& m, const IntegOpts& o, std::size_t active)
{
    if (active < 1 || active > m.n)
        throw InvalidConfig("--modes must lie in [1, n]");
    const auto model = make_model(m, g.seed);
    const auto basis = fput::mode_basis(m.n);
    const auto mm = static_cast<Eigen::Index>(active);
    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(2 * mm);
    y0[0] = std::sqrt(0.5 * static_cast<double>(m.n + 1));
    auto field = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.head(mm) = y.tail(mm);
        dy.tail(mm) = fput::truncated_mode_rhs(y.head(mm), basis, model);
    };
    const double radius = o.cfg.escape_radius;
    const auto tr = fput::integrate_adaptive_rk8(
        field, y0, o.cfg, [&](const Eigen::VectorXd& y) { return !y.allFinite() || y.head(mm).cwiseAbs().maxCoeff() > radius; });
    std::vector<double> times;
    std::vector<Eigen::VectorXd> energies;
    const Eigen::ArrayXd w = basis.frequencies().head(mm).array();
    for (const auto& s : tr.samples) {
        times.push_back(s.t);
        energies.push_back((0.5 * (s.y.tail(mm).array().square() + w.square() * s.y.head(mm).array().square())).matrix());
    }
    auto f = fput::io::open_output(out_path(g, "mode_energies.csv"));
    fput::io::write_mode_energies_csv(f, times, energies);
    if (tr.status == fput::RunStatus::BlownUp) {
        std::cerr << "blow-up detected at t = " << *tr.blowup_time << '\n';
        return kBlowUp;
    }
    if (tr.status == fput::RunStatus::Failed)
        return kIntegrationFailed;
    return kOk;
}

struct TwoModeOpts {
    std::optional<double> a_tilde, b_tilde;
    double t_final = 50.0;
    double output_dt = 0.05;
    fput::PortraitGrid grid;
    std::optional<double> delta_min, delta_max;
};

std::pair<double, double> resolve_coefficients(const Globals& g, const ModelOpts& m, const TwoModeOpts& t)
{
    if (t.a_tilde.has_value() != t.b_tilde.has_value())
        throw InvalidConfig("give both --a-tilde and --b-tilde, or neither");
    if (t.a_tilde)
        return {*t.a_tilde, *t.b_tilde};
    const auto c = fput::extract_quadratic_coefficients(make_model(m, g.seed), fput::mode_basis(m.n));
    return {c.a_tilde, c.b_tilde};
}

int cmd_two_mode(const Globals& g, const ModelOpts& m, TwoModeOpts t)
{
    if (m.n < 2)
        throw InvalidConfig("two-mode analysis needs n >= 2");
    const auto [a, b] = resolve_coefficients(g, m, t);
    const double r1_sq = 0.125 * static_cast<double>(m.n + 1);
    const auto region = fput::classify_region(a, b, r1_sq);
    const auto rep = fput::equilibria(a, b, region.c);

    json eq{{"a_tilde", a},
            {"b_tilde", b},
            {"r1_sq", r1_sq},
            {"c", region.c},
            {"region", fput::to_string(rep.region)},
            {"delta_crit_1", nan_safe(rep.delta_crit_1)},
            {"delta_crit_2", nan_safe(rep.delta_crit_2)},
            {"existence_radicand", rep.existence_radicand},
            {"singular", rep.singular},
            {"points", json::array()}};
    double max_delta = r1_sq;
    for (const auto& p : rep.points) {
        eq["points"].push_back({{"index", p.index},
                                {"theta", p.theta},
                                {"delta", p.delta},
                                {"lambda_sq", p.lambda_sq},
                                {"stability", fput::to_string(p.stability)},
                                {"in_well_defined_region", p.in_well_defined_region}});
        max_delta = std::max(max_delta, p.delta);
    }
    eq["thresholds"] = {{"existence_value", region.existence_value},
                        {"stability_value", region.stability_value},
                        {"equilibria_exist", region.equilibria_exist},
                        {"has_saddle", region.has_saddle},
                        {"bounded", region.bounded},
                        {"delta_lo", nan_safe(region.delta_lo)},
                        {"delta_hi", nan_safe(region.delta_hi)}};
    write_json(g, "equilibria.json", eq);

    t.grid.delta_min = t.delta_min.value_or(std::isfinite(region.delta_lo) ? region.delta_lo : -2.0 * r1_sq);
    t.grid.delta_max = t.delta_max.value_or(std::isfinite(region.delta_hi) ? region.delta_hi : std::max(2.0 * r1_sq, 1.2 * max_delta));
    const auto pp = fput::phase_portrait(a, b, region.c, t.grid, r1_sq, t.t_final, t.output_dt);
    {
        auto f = fput::io::open_output(out_path(g, "portrait.csv"));
        fput::io::write_portrait_csv(f, pp);
    }
    {
        auto f = fput::io::open_output(out_path(g, "ic_trajectory.csv"));
        fput::io::write_reduced_trajectory_csv(f, *pp.trajectory);
    }
    std::cout << "equilibria:";
    for (const auto& p : rep.points)
        std::cout << " (theta=" << p.theta << ", delta=" << p.delta << ", " << fput::to_string(p.stability) << ")";
    std::cout << "\ninitial-condition orbit: " << fput::to_string(pp.trajectory->exit) << " at T = " << pp.trajectory->end_T
              << '\n';
    return kOk;
}

struct BifurcationOpts {
    double a_tilde = 3.63;
    double b_min = -0.01;
    double b_max = 0.91;
    std::size_t points = 201;
};

int cmd_bifurcation(const Globals& g, const ModelOpts& m, const BifurcationOpts& o)
{
    if (o.points < 2 || !(o.b_max > o.b_min))
        throw InvalidConfig("bifurcation: need points >= 2 and b-max > b-min");
    const double r1_sq = 0.125 * static_cast<double>(m.n + 1);
    auto f = fput::io::open_output(out_path(g, "bifurcation.csv"));
    fput::io::CsvWriter w(f);
    w.header({"b_tilde", "c", "existence_value", "stability_value", "bounded", "delta_1", "stability_1", "in_region_1",
              "delta_2", "stability_2", "in_region_2"});
    for (std::size_t i = 0; i < o.points; ++i) {
        const double b = o.b_min + (o.b_max - o.b_min) * static_cast<double>(i) / static_cast<double>(o.points - 1);
        if (o.a_tilde + b == 0.0)
            continue;
        const auto region = fput::classify_region(o.a_tilde, b, r1_sq);
        w.field(b).field(region.c).field(region.existence_value).field(region.stability_value).field(region.bounded ? 1 : 0);
        const auto rep = fput::equilibria(o.a_tilde, b, region.c);
        for (std::size_t j = 0; j < 2; ++j) {
            if (j < rep.points.size()) {
                const auto& p = rep.points[j];
                w.field(p.delta).field(fput::to_string(p.stability)).field(p.in_well_defined_region ? 1 : 0);
            } else {
                w.field("nan").field("none").field(0);
            }
        }
        w.end_row();
    }
    return kOk;
}

struct SweepOpts {
    std::vector<double> taus{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    std::size_t realizations = 100;
};

int cmd_sweep(const Globals& g, const ModelOpts& m, const SweepOpts& o)
{
    fput::EnsembleSpec spec;
    spec.tau_grid = o.taus;
    spec.realizations = o.realizations;
    spec.n_particles = m.n;
    spec.master_seed = g.seed;
    const auto rows = fput::coefficient_sweep(spec, m.alpha, g.workers);
    {
        auto f = fput::io::open_output(out_path(g, "sweep.csv"));
        fput::io::write_sweep_csv(f, rows);
    }
    std::vector<double> taus, means;
    json failures = json::array();
    for (const auto& r : rows) {
        for (const auto& e : r.errors)
            failures.push_back({{"tau", r.tau}, {"error", e}});
        if (r.count > 0) {
            taus.push_back(r.tau);
            means.push_back(r.mean_b);
        }
    }
    json reg{{"failures", failures}};
    int rc = kOk;
    try {
        const auto res = fput::fit_tau_c(taus, means);
        reg["coefficients"] = {res.c2, res.c1, res.c0};
        reg["sse"] = res.sse;
        reg["tau_c"] = res.tau_c;
        reg["extrapolated"] = res.extrapolated;
        std::cout << "tau_c = " << fput::io::format_double(res.tau_c) << '\n';
    } catch (const std::exception& e) {
        reg["error"] = e.what();
        std::cerr << "regression failed: " << e.what() << '\n';
        rc = kIntegrationFailed;
    }
    write_json(g, "regression.json", reg);
    return rc;
}

struct ChaosOpts {
    std::vector<std::size_t> n_values{4, 8, 16, 32, 64};
    std::size_t realizations = 30;
    fput::ChaosOptions opts;
    fput::ChaosThresholds thresholds;
    bool write_series = false;
};

int cmd_chaos_scan(const Globals& g, const ModelOpts& m, const ChaosOpts& c)
{
    fput::ChaosScanSpec spec;
    spec.n_values = c.n_values;
    spec.tau = m.tau;
    spec.realizations = c.realizations;
    spec.alpha = m.alpha;
    spec.master_seed = g.seed;
    spec.options = c.opts;
    spec.thresholds = c.thresholds;
    spec.workers = g.workers;
    const auto rows = fput::chaos_fraction(spec);
    {
        auto f = fput::io::open_output(out_path(g, "chaos_fraction.csv"));
        fput::io::write_chaos_fraction_csv(f, rows);
    }
    json verdicts = json::array();
    for (const auto& row : rows) {
        for (const auto& r : row.records)
            verdicts.push_back(verdict_json(r));
        std::cout << "N=" << row.n << ": chaotic " << row.chaotic << ", regular " << row.regular << ", undetermined "
                  << row.undetermined << " (blown up " << row.blown_up << ")\n";
    }
    write_json(g, "verdicts.json", verdicts);

    if (c.write_series) {
        // Series are recomputed per realization; cheap compared to the scan
        // only for short horizons, hence opt-in.
        fs::create_directories(fs::path(g.output_dir) / "series");
        for (const auto& row : rows)
            for (const auto& r : row.records) {
                const auto variant = m.tau == 0.0 ? fput::Variant::Homogeneous : fput::Variant::DisorderedNonlinear;
                const auto model = fput::build_lattice(row.n, m.alpha, fput::sample_disorder(m.tau, row.n, r.seed), variant);
                const auto [w1, w2] = fput::random_orthonormal_pair(static_cast<Eigen::Index>(2 * row.n),
                                                                     fput::derive_seed(r.seed, 1));
                const std::array<Eigen::VectorXd, 2> devs{w1, w2};
                const auto run = fput::compute_indicators(model, fput::initial_condition_mode1(row.n), devs, c.opts);
                const std::string stem = "series/N" + std::to_string(row.n) + "_r" + std::to_string(r.realization);
                auto fm = fput::io::open_output(out_path(g, stem + "_mle.csv"));
                fput::io::write_series_csv(fm, run.mle);
                auto fsali = fput::io::open_output(out_path(g, stem + "_sali.csv"));
                fput::io::write_series_csv(fsali, run.sali);
            }
    }
    return kOk;
}

int cmd_recurrence(const Globals& g, const ModelOpts& m, const IntegOpts& o, double prominence, double major)
{
    const auto model = make_model(m, g.seed);
    const auto ic = fput::initial_condition_mode1(m.n);
    check_integrator(o, model);
    const auto basis = fput::mode_basis(m.n);
    const auto tr = run_lattice(o, model, ic);
    const auto n = static_cast<Eigen::Index>(m.n);
    std::vector<double> times, e1;
    for (const auto& s : tr.samples) {
        const fput::PhaseState ps{s.y.head(n), s.y.tail(n), s.t};
        times.push_back(s.t);
        e1.push_back(fput::mode_energies(fput::to_modes(ps, basis), basis)[0]);
    }
    {
        auto f = fput::io::open_output(out_path(g, "e1.csv"));
        fput::io::CsvWriter w(f);
        w.header({"t", "E_1"});
        for (std::size_t i = 0; i < times.size(); ++i) {
            w.field(times[i]).field(e1[i]);
            w.end_row();
        }
    }
    const double e_ref = e1.front();
    const auto metrics = fput::recurrence_metrics(times, e1, e_ref, prominence);
    json j{{"energy", e_ref}, {"degradation", metrics.degradation}, {"status", fput::to_string(tr.status)},
           {"peaks", json::array()}};
    for (const auto& p : metrics.peaks)
        j["peaks"].push_back(peak_json(p));
    if (const auto first = fput::first_major_recurrence(times, e1, metrics, e_ref, major)) {
        j["first_major"] = peak_json(*first);
        j["first_major"]["fraction"] = first->height / e_ref;
    }
    write_json(g, "recurrence.json", j);
    if (tr.status == fput::RunStatus::BlownUp)
        return kBlowUp;
    if (tr.status == fput::RunStatus::Failed)
        return kIntegrationFailed;
    return kOk;
}

// Keep top-level keys and those of the subcommand that ran.
std::string manifest_body(const std::string& full, const std::string& command)
{
    std::istringstream in(full);
    std::string out, line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        const auto key = line.substr(0, eq);
        if (key.find('.') == std::string::npos || key.rfind(command + ".", 0) == 0)
            out += line + '\n';
    }
    return out;
}

std::string default_output_dir()
{
    const char* env = std::getenv("FPUT_OUTPUT_DIR");
    return env && *env ? std::string(env) : std::string(".");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulation and analysis of homogeneous and disordered FPUT-alpha chains"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "flat TOML file with option values (flags override it)");
    app.set_version_flag("--version", std::string(FPUT_VERSION));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    g.output_dir = default_output_dir();
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--output-dir", g.output_dir, "directory for outputs (default: $FPUT_OUTPUT_DIR or .)");
    app.add_option("--workers", g.workers, "worker threads for ensemble commands")->check(CLI::PositiveNumber);

    // Each subcommand owns its options so the manifest only records the one that ran.
    ModelOpts sim_model, me_model, tm_model, bif_model, sw_model, cs_model, rec_model;
    IntegOpts sim_integ, me_integ, rec_integ;
    me_integ.cfg.t_final = 1000.0;
    sim_integ.cfg.t_final = 1000.0;
    rec_integ.cfg.t_final = 1.0e4;
    rec_integ.cfg.output_stride = 0.5;

    auto* sim = app.add_subcommand("simulate", "integrate the lattice from the lowest-mode start");
    std::size_t sim_modes = 4;
    add_model_options(sim, sim_model);
    add_integrator_options(sim, sim_integ);
    sim->add_option("--modes", sim_modes, "mode energies written to mode_energies.csv")->check(CLI::PositiveNumber);

    auto* me = app.add_subcommand("mode-energies", "truncated dynamics of the first M normal modes");
    std::size_t active_modes = 2;
    add_model_options(me, me_model);
    add_integrator_options(me, me_integ, false);
    me->add_option("--modes", active_modes, "number of active modes M");

    auto* tm = app.add_subcommand("two-mode", "equilibria, regions and phase portrait of the reduced system");
    TwoModeOpts two;
    add_model_options(tm, tm_model);
    tm->add_option("--a-tilde", two.a_tilde, "reduced coefficient A (extracted from the model if omitted)");
    tm->add_option("--b-tilde", two.b_tilde, "reduced coefficient B");
    tm->add_option("--t-final", two.t_final, "slow-time horizon of the initial-condition orbit");
    tm->add_option("--output-dt", two.output_dt, "slow-time sampling of that orbit");
    tm->add_option("--theta-points", two.grid.theta_points, "grid points in theta");
    tm->add_option("--delta-points", two.grid.delta_points, "grid points in Delta");
    tm->add_option("--delta-min", two.delta_min, "lower Delta of the grid");
    tm->add_option("--delta-max", two.delta_max, "upper Delta of the grid");

    auto* bif = app.add_subcommand("bifurcation", "equilibria and thresholds along a B scan");
    BifurcationOpts bo;
    add_model_options(bif, bif_model);
    bif->add_option("--a-tilde", bo.a_tilde, "fixed A");
    bif->add_option("--b-min", bo.b_min, "scan start");
    bif->add_option("--b-max", bo.b_max, "scan end");
    bif->add_option("--points", bo.points, "scan points");

    auto* sw = app.add_subcommand("sweep-coefficients", "ensemble statistics of A and B versus tau");
    SweepOpts so;
    add_model_options(sw, sw_model);
    sw->add_option("--taus", so.taus, "tau grid in percent");
    sw->add_option("--realizations", so.realizations, "realizations per tau")->check(CLI::PositiveNumber);

    auto* cs = app.add_subcommand("chaos-scan", "chaotic fraction versus lattice size");
    ChaosOpts co;
    cs_model.tau = 10.0;
    add_model_options(cs, cs_model, false);
    cs->add_option("--n-values", co.n_values, "lattice sizes");
    cs->add_option("--realizations", co.realizations, "realizations per size")->check(CLI::PositiveNumber);
    cs->add_option("--t-final", co.opts.t_final, "indicator horizon");
    cs->add_option("--renorm-interval", co.opts.renorm_interval, "deviation renormalisation interval");
    cs->add_option("--dt", co.opts.dt, "symplectic step");
    cs->add_option("--abs-tol", co.opts.adaptive.abs_tol, "adaptive absolute tolerance");
    cs->add_option("--rel-tol", co.opts.adaptive.rel_tol, "adaptive relative tolerance");
    cs->add_option("--samples-per-decade", co.opts.samples_per_decade, "log-spaced samples per decade");
    cs->add_option("--escape-radius", co.opts.escape_radius, "blow-up threshold on max |x_j|");
    cs->add_option("--sali-stop", co.opts.sali_stop, "stop a run once SALI drops below this (0: never)");
    cs->add_option("--sali-chaotic", co.thresholds.sali_chaotic, "SALI below this counts as chaotic");
    cs->add_option("--sali-regular", co.thresholds.sali_regular, "SALI above this counts as regular");
    cs->add_flag("--write-series", co.write_series, "also write every mLE/SALI series");

    auto* rec = app.add_subcommand("recurrence", "mode-1 energy peaks and recurrence degradation");
    double prominence = 0.1, major = 0.5;
    add_model_options(rec, rec_model);
    add_integrator_options(rec, rec_integ);
    rec->add_option("--prominence", prominence, "minimum peak prominence as a fraction of E");
    rec->add_option("--major-fraction", major, "height fraction defining a major recurrence");

    if (argc <= 1) {
        std::cout << app.help();
        return kInvalidConfig;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalidConfig;
    }

    const auto start = std::chrono::steady_clock::now();
    int rc = kOk;
    std::string command;
    try {
        fs::create_directories(g.output_dir);
        if (sim->parsed()) {
            command = "simulate";
            rc = cmd_simulate(g, sim_model, sim_integ, sim_modes);
        } else if (me->parsed()) {
            command = "mode-energies";
            rc = cmd_mode_energies(g, me_model, me_integ, active_modes);
        } else if (tm->parsed()) {
            command = "two-mode";
            rc = cmd_two_mode(g, tm_model, two);
        } else if (bif->parsed()) {
            command = "bifurcation";
            rc = cmd_bifurcation(g, bif_model, bo);
        } else if (sw->parsed()) {
            command = "sweep-coefficients";
            rc = cmd_sweep(g, sw_model, so);
        } else if (cs->parsed()) {
            command = "chaos-scan";
            rc = cmd_chaos_scan(g, cs_model, co);
        } else if (rec->parsed()) {
            command = "recurrence";
            rc = cmd_recurrence(g, rec_model, rec_integ, prominence, major);
        }
    } catch (const InvalidConfig& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kIntegrationFailed;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
        auto f = fput::io::open_output(out_path(g, "manifest.toml"));
        f << "# fput " << FPUT_VERSION << "\n"
          << "# command: " << command << "\n"
          << "# wall_time_s: " << fput::io::format_double(wall) << "\n"
          << "# exit_code: " << rc << "\n"
          << "# rerun: fput --config manifest.toml " << command << "\n"
          << manifest_body(app.config_to_str(true, false), command);
    } catch (const std::exception& e) {
        std::cerr << "could not write manifest: " << e.what() << '\n';
    }
    return rc;
}
