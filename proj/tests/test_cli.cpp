#include <catch_amalgamated.hpp>

#include <qdrive/rfio.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string cli = QDRIVE_CLI_PATH;
const fs::path src = QDRIVE_SOURCE_DIR;

struct Run {
    int code;
    std::string out;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qdrive_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Run run(const std::string& args, const std::string& env = "") {
    static int n = 0;
    const fs::path log = fs::temp_directory_path() / ("qdrive_cli_log_" + std::to_string(n++));
    const std::string cmd = env + " \"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int st = std::system(cmd.c_str());
    Run r{WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(log)};
    fs::remove(log);
    return r;
}

std::string nl(const std::string& name) { return "\"" + (src / "netlists" / name).string() + "\""; }


} // namespace

TEST_CASE("net writes a Touchstone file with one row per frequency", "[cli]") {
    const auto dir = scratch("net");
    const auto r = run("net --netlist " + nl("lambda4.nl") + " --grid 1e9:10e9:2001 --out \"" + dir.string() + "\"");
    INFO(r.out);
    REQUIRE(r.code == 0);
    const auto ts = qdrive::parse_touchstone(slurp(dir / "lambda4.s2p"), 2);
    CHECK(ts.freq.size() == 2001);
    CHECK(ts.freq.front() == Catch::Approx(1e9));
    CHECK(ts.freq.back() == Catch::Approx(10e9));
    CHECK(fs::exists(dir / "lambda4_yin.csv"));
    CHECK(slurp(dir / "lambda4_s.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("sweep puts the lambda/2 T1 peak inside the 5 GHz stopband", "[cli]") {
    const auto dir = scratch("sweep");
    const auto r = run("sweep --netlist " + nl("lambda2.nl") + " --cq 83fF --out \"" + dir.string() + "\"");
    INFO(r.out);
    REQUIRE(r.code == 0);
    const auto t = qdrive::read_csv(slurp(dir / "lambda2_sweep.csv"));
    const auto& f = t.column("f_q_hz");
    const auto& t1 = t.column("t1_ext_s");
    const auto k = static_cast<std::size_t>(std::max_element(t1.begin(), t1.end()) - t1.begin());
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, std::regex(R"(stopband ([0-9.]+)-([0-9.]+) GHz)")));
    const double lo = std::stod(m[1]) * 1e9, hi = std::stod(m[2]) * 1e9;
    CHECK(lo < 5e9);
    CHECK(hi > 5e9);
    CHECK(f[k] >= lo);
    CHECK(f[k] <= hi);
    CHECK(t1[k] > 1e-3);
}

TEST_CASE("budget reports about -11 dBm for a 10 ns resonant gate", "[cli]") {
    const auto dir = scratch("budget");
    const auto r = run("budget --chain \"4K:40@4,MXC:20@0.01\" --gate 10ns --t1ext 1ms --mode resonant --out \"" +
                       dir.string() + "\"");
    INFO(r.out);
    REQUIRE(r.code == 0);
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, std::regex(R"(room-temperature power\s+(-?[0-9.]+) dBm)")));
    CHECK(std::abs(std::stod(m[1]) + 11.0) <= 0.5);
}

TEST_CASE("usage errors exit with 2", "[cli]") {
    CHECK(run("").code == 2);
    CHECK(run("nonsense").code == 2);
    CHECK(run("budget --gate 10ns --t1ext 1ms --bogus").code == 2);
    CHECK(run("budget --gate ten --t1ext 1ms --out /tmp").code == 2);
    CHECK(run("net --netlist /nonexistent/file.nl").code == 2);
    CHECK(run("--help").code == 0);
}

TEST_CASE("domain errors exit with 1 and name the module", "[cli]") {
    const auto dir = scratch("domain");
    const auto r = run("sweep --netlist " + nl("standard.nl") + " --cq -5fF --out \"" + dir.string() + "\"");
    CHECK(r.code == 1);
    CHECK(r.out.find("[coupling]") != std::string::npos);

    const fs::path bad = dir / "bad.nl";
    std::ofstream(bad) << "C a b 1fF\nPORT 1 a 50\nXYZ 1 2\n";
    const auto r2 = run("net --netlist \"" + bad.string() + "\" --out \"" + dir.string() + "\"");
    CHECK(r2.code == 1);
    CHECK(r2.out.find("[rfio]") != std::string::npos);
    CHECK(r2.out.find("hint") != std::string::npos);
}

TEST_CASE("identical arguments give byte-identical files", "[cli]") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    for (const auto& d : {a, b}) {
        REQUIRE(run("sweep --netlist " + nl("lambda4.nl") + " --grid 3e9:7e9:101 --out \"" + d.string() + "\"").code == 0);
        REQUIRE(run("sequence --flux 0.1 --noise 0.01 --seed 7 --out \"" + d.string() + "\"").code == 0);
        REQUIRE(run("dynamics --frame resonant --duration 100ns --samples 51 --out \"" + d.string() + "\"").code == 0);
    }
    for (const char* f : {"lambda4_sweep.csv", "sequence.csv", "sequence.txt", "dynamics.csv"}) {
        INFO(f);
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(!slurp(a / f).empty());
    }
}

TEST_CASE("every shipped netlist parses and sweeps", "[cli]") {
    const auto dir = scratch("all");
    for (const auto& e : fs::directory_iterator(src / "netlists")) {
        if (e.path().extension() != ".nl") continue;
        INFO(e.path());
        const auto r = run("net --netlist \"" + e.path().string() + "\" --grid 1e9:10e9:301 --cq 83fF --out \"" +
                           dir.string() + "\"");
        INFO(r.out);
        CHECK(r.code == 0);
        const auto t = qdrive::read_csv(slurp(dir / (e.path().stem().string() + "_yin.csv")));
        CHECK(t.column("f_hz").size() == 301);
    }
}

TEST_CASE("QDRIVE_OUT sets the default output directory", "[cli]") {
    const auto dir = scratch("env");
    const auto r = run("budget --gate 10ns --t1ext 1ms", "QDRIVE_OUT=\"" + dir.string() + "\"");
    INFO(r.out);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "budget.csv"));
}

TEST_CASE("config file supplies subcommand and flags; command line wins", "[cli]") {
    const auto dir = scratch("config");
    const fs::path cfg = dir / "run.cfg";
    std::ofstream(cfg) << "# budget run\nsubcommand = budget\nchain = 4K:40@4,MXC:20@0.01\ngate = 20ns\nt1ext = 1ms\n"
                          "out = "
                       << dir.string() << "\n";
    const auto r = run("--config \"" + cfg.string() + "\"");
    INFO(r.out);
    REQUIRE(r.code == 0);
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, std::regex(R"(room-temperature power\s+(-?[0-9.]+) dBm)")));
    const double p20 = std::stod(m[1]);
    const auto r2 = run("budget --gate 10ns --config \"" + cfg.string() + "\"");
    REQUIRE(r2.code == 0);
    REQUIRE(std::regex_search(r2.out, m, std::regex(R"(room-temperature power\s+(-?[0-9.]+) dBm)")));
    CHECK(std::stod(m[1]) - p20 == Catch::Approx(20 * std::log10(2.0)).margin(0.02));

    std::ofstream(cfg) << "no equals sign here\n";
    CHECK(run("--config \"" + cfg.string() + "\"").code == 2);
}

TEST_CASE("fit reports the parameters of a clean decaying cosine", "[cli]") {
    const auto dir = scratch("fit");
    qdrive::Table t;
    std::vector<double> x, y;
    for (int i = 0; i < 200; ++i) {
        x.push_back(i * 1e-9);
        y.push_back(0.5 - 0.5 * std::exp(-x.back() / 1e-6) * std::cos(2 * M_PI * 20e6 * x.back()));
    }
    t.add("t", x).add("p", y);
    std::ofstream(dir / "osc.csv") << qdrive::write_csv(t);
    const auto r = run("fit --input \"" + (dir / "osc.csv").string() + "\" --model decaying_cosine --out \"" +
                       dir.string() + "\"");
    INFO(r.out);
    REQUIRE(r.code == 0);
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, std::regex(R"(frequency\s+([0-9.e+]+))")));
    CHECK(std::stod(m[1]) == Catch::Approx(20e6).epsilon(1e-6));
    CHECK(fs::exists(dir / "fit.svg"));
}
