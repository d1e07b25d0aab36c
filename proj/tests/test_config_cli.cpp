#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "colddamp/config.hpp"
#include "colddamp/markov.hpp"
#include "colddamp/spectral.hpp"
#include "test_helpers.hpp"

using namespace colddamp;
namespace fs = std::filesystem;

namespace {

const char* kFig2Config = R"(
# single reference mode
modes.1.omega = 1.0
modes.1.gamma = 4e-5
modes.1.nbar = 1e5
modes.1.G = 0.2
modes.1.g_cd = 0.6
cavity.kappa = 4.0
cavity.eta = 1.0
feedback.omega_fb = 4.5
feedback.tau = 0.0
)";

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() /
                     ("colddamp_cli_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path path = work_dir() / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    return path;
}

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(COLDDAMP_CLI_PATH) + " " + args + " > /dev/null 2> /dev/null";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("config parsing: values, arrays, grids") {
    const Config cfg = Config::parse_string(
        "a.x = 1.5\n"
        "a.flag = true\n"
        "a.name = hello\n"
        "grid.tau = [0.0, 0.5, 1.0]\n"
        "lin.tau_min = 0.0\n"
        "lin.tau_max = 2.0\n"
        "lin.tau_points = 5\n");
    CHECK(cfg.number("a.x") == 1.5);
    CHECK(cfg.flag_or("a.flag", false));
    CHECK(cfg.text("a.name") == "hello");
    const auto arr = cfg.grid("grid.tau");
    REQUIRE(arr.size() == 3);
    CHECK(arr[1] == 0.5);
    const auto lin = cfg.grid("lin.tau");
    REQUIRE(lin.size() == 5);
    CHECK(lin[4] == 2.0);
    CHECK(lin[1] == 0.5);
    CHECK_NOTHROW(cfg.ensure_all_consumed());
}

TEST_CASE("config parsing: errors carry location information") {
    CHECK_THROWS_AS(Config::parse_string("novalue\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("a = 1\na = 2\n"), ConfigError);

    const Config cfg = Config::parse_string("known = 1\nmystery.key = 2\n", "test.cfg");
    cfg.number("known");
    try {
        cfg.ensure_all_consumed();
        FAIL("unknown key accepted");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("mystery.key") != std::string::npos);
        CHECK(msg.find("line 2") != std::string::npos);
    }
}

TEST_CASE("spec round trip is value-exact") {
    const Config cfg = Config::parse_string(kFig2Config);
    const SystemSpec spec = cfg.build_spec();
    CHECK(spec.modes[0].gamma == 4e-5);
    CHECK(spec.modes[0].nbar == 1e5);
    CHECK(spec.cavity.kappa == 4.0);
    CHECK(spec.feedback.regime == Regime::sfflc);

    const std::string text = serialize(spec);
    const SystemSpec again = Config::parse_string(text).build_spec();
    CHECK(again.modes[0].omega == spec.modes[0].omega);
    CHECK(again.modes[0].gamma == spec.modes[0].gamma);
    CHECK(again.modes[0].nbar == spec.modes[0].nbar);
    CHECK(again.modes[0].G == spec.modes[0].G);
    CHECK(again.modes[0].g_cd == spec.modes[0].g_cd);
    CHECK(again.cavity.kappa == spec.cavity.kappa);
    CHECK(again.feedback.omega_fb == spec.feedback.omega_fb);
    CHECK(serialize(again) == text);
}

TEST_CASE("spec building rejects mixed coupling sources") {
    CHECK_THROWS_AS(Config::parse_string("modes.1.omega = 1\n"
                                         "modes.1.gamma = 1e-3\n"
                                         "modes.1.nbar = 10\n"
                                         "modes.1.G = 0.1\n"
                                         "modes.1.g_om = 0.1\n"
                                         "modes.1.g_cd = 0.5\n"
                                         "cavity.kappa = 4\n"
                                         "feedback.omega_fb = 4.5\n")
                        .build_spec(),
                    ConfigError);
}

TEST_CASE("cli steady: closed form writes the reference occupancy") {
    const fs::path cfg = write_config("fig2.cfg", kFig2Config);
    const fs::path out = work_dir() / "steady_closed";
    REQUIRE(run_cli("steady --config " + cfg.string() + " --out " + out.string() +
                    " --method closed-form") == 0);

    const auto rows = read_csv(out / "occupancies.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == "n_eff");
    CHECK(std::stod(rows[1][1]) == doctest::Approx(133.3229).epsilon(1e-4));

    // Sidecar carries the resolved config for auditability.
    const std::string meta = slurp(out / "occupancies.csv.meta.json");
    CHECK(meta.find("modes.1.omega") != std::string::npos);
    CHECK(meta.find("closed-form") != std::string::npos);
}

TEST_CASE("cli steady: unstable delay exits 2 without output") {
    std::string body(kFig2Config);
    body.replace(body.find("feedback.tau = 0.0"), 18, "feedback.tau = 3.14159265");
    const fs::path cfg = write_config("unstable.cfg", body);
    const fs::path out = work_dir() / "steady_unstable";
    CHECK(run_cli("steady --config " + cfg.string() + " --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out / "occupancies.csv"));
}

TEST_CASE("cli steady: fourier and wFFLC Lyapunov agree at the 2% level") {
    const fs::path cfg = write_config("fig2b.cfg", kFig2Config);
    const fs::path out_f = work_dir() / "steady_fourier";
    const fs::path out_l = work_dir() / "steady_wfflc";
    REQUIRE(run_cli("steady --config " + cfg.string() + " --out " + out_f.string() +
                    " --method fourier") == 0);
    REQUIRE(run_cli("steady --config " + cfg.string() + " --out " + out_l.string() +
                    " --method lyapunov-wfflc") == 0);
    const double nf = std::stod(read_csv(out_f / "occupancies.csv")[1][1]);
    const double nl = std::stod(read_csv(out_l / "occupancies.csv")[1][1]);
    CHECK(std::abs(nf - nl) / nl < 0.02);
}

TEST_CASE("cli steady: unknown config keys are rejected with exit 1") {
    std::string body(kFig2Config);
    body += "mystery.knob = 1\n";
    const fs::path cfg = write_config("unknown.cfg", body);
    CHECK(run_cli("steady --config " + cfg.string() + " --out " +
                  (work_dir() / "x").string()) == 1);
}

TEST_CASE("cli spectrum: peak tracks the effective resonance over a delay family") {
    std::string body(kFig2Config);
    body += "spectrum.omega_min = 0.9\n";
    body += "spectrum.omega_max = 1.12\n";
    body += "spectrum.omega_points = 2201\n";
    body += "spectrum.tau = [0.0, 0.5, 1.0, 1.4]\n";
    const fs::path cfg = write_config("spectrum.cfg", body);
    const fs::path out = work_dir() / "spectrum";
    REQUIRE(run_cli("spectrum --config " + cfg.string() + " --out " + out.string()) == 0);

    const SystemSpec spec = Config::parse_string(kFig2Config).build_spec();
    const std::vector<double> taus{0.0, 0.5, 1.0, 1.4};
    for (int t = 0; t < 4; ++t) {
        const auto rows = read_csv(out / ("spectrum_" + std::to_string(t + 1) + ".csv"));
        REQUIRE(rows.size() == 2202);
        double best_w = 0.0, best_s = -1.0;
        for (size_t i = 1; i < rows.size(); ++i) {
            const double s = std::stod(rows[i][1]);
            if (s > best_s) {
                best_s = s;
                best_w = std::stod(rows[i][0]);
            }
        }
        const EffectiveResponse eff = effective_response(spec, 1.0, taus[t]);
        CHECK(best_w == doctest::Approx(std::sqrt(eff.omega_eff_sq[0])).epsilon(0.01));
    }
}

TEST_CASE("cli spectrum: zero-width grid exits 1") {
    std::string body(kFig2Config);
    body += "spectrum.omega_min = 1.0\n";
    body += "spectrum.omega_max = 1.0\n";
    body += "spectrum.omega_points = 1\n";
    const fs::path cfg = write_config("spectrum_bad.cfg", body);
    CHECK(run_cli("spectrum --config " + cfg.string() + " --out " +
                  (work_dir() / "sbad").string()) == 1);
}

TEST_CASE("cli spectrum: collective bright line widens with the mode number") {
    auto degenerate_config = [](int n) {
        std::ostringstream body;
        for (int k = 1; k <= n; ++k) {
            body << "modes." << k << ".omega = 1.0\n";
            body << "modes." << k << ".gamma = 4e-5\n";
            body << "modes." << k << ".nbar = 1e5\n";
            body << "modes." << k << ".G = 0.2\n";
            body << "modes." << k << ".g_cd = 0.6\n";
        }
        body << "cavity.kappa = 4.0\n";
        body << "feedback.omega_fb = 4.5\n";
        body << "feedback.regime = wfflc\n";
        body << "spectrum.omega_min = 0.52\n";
        body << "spectrum.omega_max = 1.72\n";
        body << "spectrum.omega_points = 2401\n";
        body << "spectrum.collective = true\n";
        return body.str();
    };

    double previous_width = 0.0;
    for (int n : {2, 4, 8}) {
        const fs::path cfg =
            write_config("degen" + std::to_string(n) + ".cfg", degenerate_config(n));
        const fs::path out = work_dir() / ("coll" + std::to_string(n));
        REQUIRE(run_cli("spectrum --config " + cfg.string() + " --out " + out.string()) == 0);
        const auto rows = read_csv(out / "spectrum_1.csv");
        REQUIRE(rows[0][1] == "s_Q_1");

        std::vector<double> w(rows.size() - 1), s(rows.size() - 1);
        size_t peak = 0;
        for (size_t i = 1; i < rows.size(); ++i) {
            w[i - 1] = std::stod(rows[i][0]);
            s[i - 1] = std::stod(rows[i][1]);
            if (s[i - 1] > s[peak]) peak = i - 1;
        }
        size_t lo = peak, hi = peak;
        while (lo > 0 && s[lo] > 0.5 * s[peak]) --lo;
        while (hi + 1 < s.size() && s[hi] > 0.5 * s[peak]) ++hi;
        const double width = w[hi] - w[lo];
        CHECK(width > previous_width);
        previous_width = width;
    }
}

TEST_CASE("cli simulate: row shape, determinism, steady value") {
    std::string body(kFig2Config);
    body += "sim.dt = 0.004\n";
    body += "sim.t_end = 0.04\n";  // 10 steps
    body += "sim.n_traj = 1\n";
    body += "sim.record_stride = 2\n";
    body += "sim.seed = 7\n";
    const fs::path tiny = write_config("sim_tiny.cfg", body);
    const fs::path out_a = work_dir() / "sim_a";
    const fs::path out_b = work_dir() / "sim_b";
    REQUIRE(run_cli("simulate --config " + tiny.string() + " --out " + out_a.string()) == 0);
    REQUIRE(run_cli("simulate --config " + tiny.string() + " --out " + out_b.string()) == 0);

    const auto rows = read_csv(out_a / "trajectory.csv");
    CHECK(rows.size() == 1 + 10 / 2 + 1);  // header + records at steps 0,2,...,10
    CHECK(slurp(out_a / "trajectory.csv") == slurp(out_b / "trajectory.csv"));

    std::string longer(kFig2Config);
    longer += "sim.t_end = 800\n";
    longer += "sim.n_traj = 64\n";
    longer += "sim.seed = 11\n";
    const fs::path cfg = write_config("sim_long.cfg", longer);
    const fs::path out = work_dir() / "sim_long";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out.string()) == 0);

    const std::string meta = slurp(out / "trajectory.csv.meta.json");
    CHECK(meta.find("splitmix64") != std::string::npos);
    CHECK(meta.find("\"diverged\": false") != std::string::npos);

    // Transient decays toward the Fourier steady state.
    const auto data = read_csv(out / "trajectory.csv");
    const double first = std::stod(data[1][1]);
    const double last = std::stod(data.back()[1]);
    CHECK(first > 10.0 * last);
    const SystemSpec spec = Config::parse_string(kFig2Config).build_spec();
    const double target = occupancy_fourier(spec, 0.0)[0];
    CHECK(std::abs(last - target) / target < 0.25);
}

TEST_CASE("cli scan: two-mode map has a stable zero-delay column and unstable cells") {
    std::ostringstream body;
    body << "modes.1.omega = 1.0\nmodes.1.gamma = 4e-5\nmodes.1.nbar = 1e5\n"
            "modes.1.G = 0.3\nmodes.1.g_cd = 0.6\n";
    body << "modes.2.omega = 1.0\nmodes.2.gamma = 6e-5\nmodes.2.nbar = 1e5\n"
            "modes.2.G = 0.2\nmodes.2.g_cd = 0.6\n";
    body << "cavity.kappa = 4.0\nfeedback.omega_fb = 4.5\n";
    body << "scan.tau_min = 0.0\nscan.tau_max = 7.0\nscan.tau_points = 25\n";
    body << "scan.spacing_min = 0.05\nscan.spacing_max = 1.0\nscan.spacing_points = 8\n";
    const fs::path cfg = write_config("scan2d.cfg", body.str());
    const fs::path out = work_dir() / "scan2d";
    REQUIRE(run_cli("scan --config " + cfg.string() + " --out " + out.string()) == 0);

    const auto rows = read_csv(out / "scan.csv");
    REQUIRE(rows.size() == 1 + 25 * 8);
    int unstable = 0;
    for (size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 5);
        if (rows[i][4] != "stable") {
            ++unstable;
            CHECK(rows[i][2].empty());
        }
        if (std::stod(rows[i][0]) == 0.0) CHECK(rows[i][4] == "stable");
    }
    CHECK(unstable > 0);
}

TEST_CASE("cli optimize: revival beats 1.005x the zero-delay objective") {
    std::string body(kFig2Config);
    body += "optimize.tau_min = 0.0\n";
    body += "optimize.tau_max = 12.566370614359172\n";
    const fs::path cfg = write_config("opt.cfg", body);
    const fs::path out = work_dir() / "opt";
    REQUIRE(run_cli("optimize --config " + cfg.string() + " --out " + out.string()) == 0);
    const auto rows = read_csv(out / "optimize.csv");
    REQUIRE(rows.size() == 2);
    const double objective = std::stod(rows[1][1]);
    const double base = 133.32290279627165;
    CHECK(objective <= 1.005 * base);
    CHECK(std::stod(rows[1][3]) < 0.0);
}

TEST_CASE("cli optimize: fully unstable bounds exit 2") {
    std::string body(kFig2Config);
    body += "optimize.tau_min = 1.8849555921538759\n";  // 0.6 pi
    body += "optimize.tau_max = 4.39822971502571\n";    // 1.4 pi
    const fs::path cfg = write_config("opt_bad.cfg", body);
    CHECK(run_cli("optimize --config " + cfg.string() + " --out " +
                  (work_dir() / "optbad").string()) == 2);
}

TEST_CASE("cli leaves the input config untouched") {
    const fs::path cfg = write_config("untouched.cfg", kFig2Config);
    const std::string before = slurp(cfg);
    run_cli("steady --config " + cfg.string() + " --out " + (work_dir() / "ut").string());
    CHECK(slurp(cfg) == before);
}

TEST_CASE("cli usage errors exit 1") {
    CHECK(run_cli("steady") == 1);                       // missing --config
    CHECK(run_cli("steady --config /nonexistent") == 1);  // unreadable file
}
