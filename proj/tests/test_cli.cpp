#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string bin() {
    const char* b = std::getenv("SELFCONT_BIN");
    REQUIRE(b != nullptr);
    return b;
}

int run(const std::string& args) {
    const std::string cmd = bin() + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path old = fs::current_path();
    fs::path dir;
    TempDir() {
        dir = old / "cli_scratch";
        fs::create_directories(dir);
        fs::current_path(dir);
    }
    ~TempDir() {
        fs::current_path(old);
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

}  // namespace

TEST_CASE("help exits zero on every subcommand") {
    TempDir tmp;
    CHECK(run("--help") == 0);
    for (const char* sub : {"probe", "germ-direction", "integrate", "minimize", "mvalue",
                            "verify", "sobolev", "zoo"})
        CHECK(run(std::string(sub) + " --help") == 0);
}

TEST_CASE("zoo list prints the catalog") {
    TempDir tmp;
    CHECK(run("zoo list") == 0);
    const std::string out = slurp("cli_stdout.txt");
    CHECK(out.find("radial-unit") != std::string::npos);
    CHECK(out.find("power-radial") != std::string::npos);
}

TEST_CASE("probe verdicts are results, not failures") {
    TempDir tmp;
    CHECK(run("probe --zoo rot-unit --at 0,0") == 0);
    const auto j = nlohmann::json::parse(slurp("probe_report.json"));
    CHECK(j["verdict"] == "NotSelfContinuous");

    // every output file is referenced in the run report and exists
    const auto rep = nlohmann::json::parse(slurp("probe_run.json"));
    CHECK(rep["version"] == "0.1.0");
    for (const auto& f : rep["outputs"]) CHECK(fs::exists(f.get<std::string>()));
}

TEST_CASE("malformed field files exit 3; usage errors exit 2") {
    TempDir tmp;
    std::ofstream("bad.fld") << "dim 2; f = (x2, x1*)";
    CHECK(run("minimize --field bad.fld --x0 0,0 --T 1") == 3);
    CHECK(run("probe --zoo rot-unit") == 2);            // no --at/--grid
    CHECK(run("probe --at 0,0") == 2);                  // no field source
    CHECK(run("definitely-not-a-subcommand") == 2);
    CHECK(run("probe --zoo no-such-entry --at 0,0") == 3);
}

TEST_CASE("grid probe writes one row per node") {
    TempDir tmp;
    CHECK(run("probe --zoo rot-unit --grid -1,-1:1,1 5,5") == 0);
    const auto j = nlohmann::json::parse(slurp("probe_report.json"));
    CHECK(j["grid"].size() == 25);
}

TEST_CASE("minimize is bitwise reproducible for a fixed seed") {
    TempDir tmp;
    const std::string args =
        "minimize --zoo converge-axis --x0 0.5,0 --T 1.5 --nodes 16 --budget 60000 "
        "--restarts 2 --init germ-snap:0.1:\"x1 == 0\" --workers 2 --seed 99";
    CHECK(run(args + " --out a.csv --report a.json --run-report ra.json") == 0);
    CHECK(run(args + " --out b.csv --report b.json --run-report rb.json") == 0);
    CHECK(slurp("a.csv") == slurp("b.csv"));
    auto ja = nlohmann::json::parse(slurp("a.json"));
    auto jb = nlohmann::json::parse(slurp("b.json"));
    ja["path_file"] = jb["path_file"] = "";
    CHECK(ja.dump() == jb.dump());
    // run reports match except timing
    auto ra = nlohmann::json::parse(slurp("ra.json"));
    auto rb = nlohmann::json::parse(slurp("rb.json"));
    ra.erase("timing_seconds");
    rb.erase("timing_seconds");
    ra["inputs"].erase("out");
    rb["inputs"].erase("out");
    CHECK(ra["seed"] == 99);
}

TEST_CASE("SELFCONT_SEED is used when --seed is absent") {
    TempDir tmp;
    const std::string cmd = "SELFCONT_SEED=1234 " + bin() +
                            " probe --zoo radial-unit --at 0,0 >/dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    const auto rep = nlohmann::json::parse(slurp("probe_run.json"));
    CHECK(rep["seed"] == 1234);
}

TEST_CASE("zoo export round trips through the CLI") {
    TempDir tmp;
    CHECK(run("zoo export converge-axis --dir .") == 0);
    CHECK(fs::exists("converge-axis.fld"));
    CHECK(fs::exists("converge-axis.json"));
    // the exported field file is usable as --field input
    CHECK(run("probe --field converge-axis.fld --at 0,1") == 0);
    const auto j = nlohmann::json::parse(slurp("probe_report.json"));
    CHECK(j["verdict"] == "SelfContinuous");
}

TEST_CASE("integrate writes the path and the step report") {
    TempDir tmp;
    CHECK(run("integrate --zoo converge-axis --x0 0.5,0 --T 1.5 --h 0.1 "
              "--mode snap:\"x1 == 0\":1e-9 --out slide.csv") == 0);
    CHECK(fs::exists("slide.csv"));
    const auto j = nlohmann::json::parse(slurp("integrate_report.json"));
    CHECK(j["E_total"].get<double>() <= 1e-6);
    CHECK(j["truncated"] == false);

    // the produced CSV can seed a verification run
    CHECK(run("verify --zoo converge-axis --path slide.csv "
              "--family files:slide{j}.csv --jlist 1 2>&1") == 4);  // missing family file
}

TEST_CASE("sobolev subcommand writes report and shell table") {
    TempDir tmp;
    CHECK(run("sobolev --zoo power-radial --param alpha=-1 --param N=2 --x0 0,0 --rho 1 "
              "--shells 25 --angular 32 --grad fd --seed 4") == 0);
    const auto j = nlohmann::json::parse(slurp("sobolev_report.json"));
    CHECK(j["verdict"] == "convergent");
    const std::string csv = slurp("sobolev_shells.csv");
    CHECK(csv.find("r_inner,partial_integral") == 0);
}

TEST_CASE("integrate in germ mode with a germ file") {
    TempDir tmp;
    std::ofstream("rot.germ")
        << "dim 2; pos = (x1 * cos(eps) + x2 * sin(eps), -x1 * sin(eps) + x2 * cos(eps)); "
           "vel = (-x1 * sin(eps) + x2 * cos(eps), -x1 * cos(eps) - x2 * sin(eps)); "
           "epsmax = 1";
    CHECK(run("integrate --zoo rot-unit --x0 1,0 --T 1 --h 0.1 --mode germ:rot.germ") == 0);
    const auto j = nlohmann::json::parse(slurp("integrate_report.json"));
    CHECK(j["mode"] == "germ");
    CHECK(j["E_total"].get<double>() <= 0.01);
}

TEST_CASE("verify against a family of path files") {
    TempDir tmp;
    // candidate: horizontal line through the origin; family: (t, 1/j)
    std::ofstream("x.csv") << "t,x1,x2\n0,0,0\n1,1,0\n";
    for (int j : {2, 32}) {
        std::ofstream out("fam" + std::to_string(j) + ".csv");
        out << "t,x1,x2\n0,0," << 1.0 / j << "\n1,1," << 1.0 / j << "\n";
    }
    CHECK(run("verify --zoo cross-axis-swapped --path x.csv --family files:fam{j}.csv "
              "--jlist 2,32") == 0);
    const auto j = nlohmann::json::parse(slurp("verify_report.json"));
    CHECK(j["accepted"] == true);
}

TEST_CASE("mvalue writes the value-function table") {
    TempDir tmp;
    CHECK(run("mvalue --zoo radial-unit --x0 0,0 --rgrid 0.25,0.5 --nodes 16 "
              "--budget 50000 --restarts 1 --init germ-plain:0.05 --seed 3") == 0);
    const std::string csv = slurp("mvalue.csv");
    CHECK(csv.find("r,m_estimate") == 0);
    CHECK(csv.find("0.25,") != std::string::npos);
}

TEST_CASE("germ-direction subcommand") {
    TempDir tmp;
    std::ofstream("radial.fld") << "dim 2; f = (x1 / norm(x1, x2), x2 / norm(x1, x2))";
    CHECK(run("germ-direction --field radial.fld --at 0,0 --dirs 32") == 0);
    const auto j = nlohmann::json::parse(slurp("germ_direction_report.json"));
    CHECK(j["found"] == true);
    CHECK(j["speed"] == 1.0);
}
