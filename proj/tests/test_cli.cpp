// Runs the fput executable and checks exit codes and written files.

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args)
{
    const std::string cmd = std::string(FPUT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("fput_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("no arguments prints usage and fails")
{
    CHECK(run("") == 2);
    CHECK(run("--help") == 0);
}

TEST_CASE("unknown flags and bad combinations are configuration errors")
{
    const auto d = scratch("bad");
    CHECK(run("simulate --no-such-flag") == 2);
    CHECK(run("simulate --tau 10 --integrator yoshida --output-dir " + d.string()) == 2);
    CHECK(run("simulate --variant homogeneous --tau 5 --output-dir " + d.string()) == 2);
    CHECK(run("simulate --integrator leapfrog --output-dir " + d.string()) == 2);
    CHECK(run("two-mode --a-tilde 3.63 --output-dir " + d.string()) == 2);
}

TEST_CASE("simulate writes outputs and a manifest that reproduces them")
{
    const auto d1 = scratch("sim1");
    const auto d2 = scratch("sim2");
    REQUIRE(run("simulate --n 8 --t-final 50 --output-stride 0.5 --output-dir " + d1.string()) == 0);
    for (const char* f : {"trajectory.csv", "mode_energies.csv", "summary.json", "manifest.toml"})
        CHECK(fs::exists(d1 / f));
    const auto manifest = slurp(d1 / "manifest.toml");
    CHECK(manifest.find("simulate.n=8") != std::string::npos);
    CHECK(manifest.find("seed=1") != std::string::npos);
    CHECK(manifest.find("wall_time_s") != std::string::npos);

    REQUIRE(run("--config " + (d1 / "manifest.toml").string() + " --output-dir " + d2.string() + " simulate") == 0);
    CHECK(slurp(d1 / "trajectory.csv") == slurp(d2 / "trajectory.csv"));
    CHECK(slurp(d1 / "mode_energies.csv") == slurp(d2 / "mode_energies.csv"));
}

TEST_CASE("flags override configuration file values")
{
    const auto d1 = scratch("ovr1");
    const auto d2 = scratch("ovr2");
    REQUIRE(run("simulate --n 8 --t-final 5 --output-dir " + d1.string()) == 0);
    REQUIRE(run("--config " + (d1 / "manifest.toml").string() + " simulate --n 6 --output-dir " + d2.string()) == 0);
    CHECK(slurp(d2 / "trajectory.csv").rfind("t,x_1,x_2,x_3,x_4,x_5,x_6,p_1", 0) == 0);
}

TEST_CASE("blow-up has its own exit code")
{
    const auto d = scratch("blow");
    CHECK(run("simulate --n 64 --tau 20 --t-final 10000 --output-stride 10 --output-dir " + d.string()) == 4);
    CHECK(fs::exists(d / "trajectory.csv"));
    CHECK(slurp(d / "summary.json").find("blown_up") != std::string::npos);
}

TEST_CASE("two-mode report for given coefficients")
{
    const auto d = scratch("two");
    REQUIRE(run("two-mode --a-tilde 5.3932 --b-tilde -0.0015 --output-dir " + d.string()) == 0);
    const auto eq = slurp(d / "equilibria.json");
    CHECK(eq.find("saddle") != std::string::npos);
    CHECK(eq.find("9.1274") != std::string::npos);
    CHECK(fs::exists(d / "portrait.csv"));
    CHECK(fs::exists(d / "ic_trajectory.csv"));
}

TEST_CASE("remaining commands run")
{
    const auto d = scratch("misc");
    CHECK(run("bifurcation --points 11 --output-dir " + d.string()) == 0);
    CHECK(fs::exists(d / "bifurcation.csv"));
    CHECK(run("sweep-coefficients --n 64 --realizations 5 --taus 0 4 8 12 --output-dir " + d.string()) == 0);
    CHECK(slurp(d / "regression.json").find("tau_c") != std::string::npos);
    // B stays far from zero for N = 16: the fit has no root to report.
    CHECK(run("sweep-coefficients --n 16 --realizations 5 --taus 0 4 8 12 --output-dir " + d.string()) == 3);
    CHECK(slurp(d / "regression.json").find("error") != std::string::npos);
    CHECK(run("chaos-scan --n-values 4 --realizations 2 --t-final 100 --output-dir " + d.string()) == 0);
    CHECK(slurp(d / "chaos_fraction.csv").rfind("N,percent_chaotic,percent_undetermined\n4,", 0) == 0);
    CHECK(slurp(d / "verdicts.json").find("sali_final") != std::string::npos);
    CHECK(run("recurrence --n 8 --t-final 500 --output-dir " + d.string()) == 0);
    CHECK(fs::exists(d / "e1.csv"));
    CHECK(run("mode-energies --n 16 --modes 3 --t-final 100 --output-dir " + d.string()) == 0);
    CHECK(slurp(d / "mode_energies.csv").rfind("t,E_1,E_2,E_3\n", 0) == 0);
    CHECK(run("mode-energies --n 4 --modes 9 --output-dir " + d.string()) == 2);
}

TEST_CASE("output directory defaults to the environment")
{
    const auto d = scratch("env");
    const std::string cmd = "FPUT_OUTPUT_DIR=" + d.string() + " " + FPUT_CLI_PATH
                            + " bifurcation --points 3 > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(d / "bifurcation.csv"));
}
