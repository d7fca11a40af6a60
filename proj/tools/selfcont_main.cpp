// selfcont: probe self-continuity of discontinuous vector fields, assemble
// germ-step trajectories, minimize the path error functional, verify
// generalized solutions, and test the singular-gradient integrability
// criterion. JSON for reports, CSV for paths and shell tables; seeded runs
// reproduce bitwise.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "selfcont/selfcont.hpp"

using namespace selfcont;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Vec parse_vec(const std::string& csv) {
    Vec out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t next = csv.find(',', pos);
        const std::string cell = csv.substr(pos, next == std::string::npos ? next : next - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw UsageError("bad numeric list: '" + csv + "'");
        }
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (out.empty()) throw UsageError("empty numeric list");
    return out;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> out;
    for (double v : parse_vec(csv)) out.push_back(static_cast<int>(v));
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ParamMap parse_params(const std::vector<std::string>& kvs) {
    ParamMap out;
    for (const std::string& kv : kvs) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--param expects key=value, got " + kv);
        out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return out;
}

struct FieldSource {
    std::string file;
    std::string zoo_name;
    std::vector<std::string> params;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--field", file, "field definition file");
        cmd->add_option("--zoo", zoo_name, "catalog entry name");
        cmd->add_option("--param", params, "catalog parameter override key=value")
            ->take_all();
    }

    VectorFieldDef resolve(std::optional<ZooEntry>* entry_out = nullptr) const {
        if (file.empty() == zoo_name.empty())
            throw UsageError("exactly one of --field or --zoo is required");
        if (!file.empty()) return parse_field(read_file(file));
        ZooEntry entry = zoo_instantiate(zoo_name, parse_params(params));
        VectorFieldDef field = entry.field;
        if (entry_out) *entry_out = std::move(entry);
        return field;
    }

    ordered_json describe() const {
        ordered_json j;
        if (!file.empty()) j["field"] = file;
        if (!zoo_name.empty()) {
            j["zoo"] = zoo_name;
            j["params"] = params;
        }
        return j;
    }
};

struct RunReport {
    std::string command;
    ordered_json inputs;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void write(const std::string& path, const std::string& summary) {
        ordered_json j;
        j["command"] = command;
        j["inputs"] = inputs;
        j["seed"] = seed;
        j["outputs"] = outputs;
        j["timing_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        j["version"] = kVersion;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << j.dump(2) << "\n";
        std::cout << summary << " (run report: " << path << ")\n";
    }
};

void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::uint64_t resolve_seed(CLI::Option* seed_opt, std::uint64_t seed_flag) {
    if (seed_opt->count() > 0) return seed_flag;
    if (const char* env = std::getenv("SELFCONT_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError("SELFCONT_SEED is not an integer");
        }
    }
    return seed_flag;
}

SnapSpec parse_snap_arg(const std::string& text, int dim) {
    // PRED[:TOL]; the predicate itself contains no ':'
    std::string pred = text;
    double tol = 1e-9;
    const std::size_t colon = text.rfind(':');
    if (colon != std::string::npos) {
        bool numeric_tail = true;
        try {
            std::size_t used = 0;
            tol = std::stod(text.substr(colon + 1), &used);
            if (used != text.size() - colon - 1) numeric_tail = false;
        } catch (const std::exception&) {
            numeric_tail = false;
        }
        if (numeric_tail)
            pred = text.substr(0, colon);
        else
            tol = 1e-9;
    }
    ParseOptions opts;
    opts.dim = dim;
    return SnapSpec{parse_predicate(pred, opts), tol};
}

std::vector<Expr> parse_expr_vector(const std::string& text, const ParseOptions& opts) {
    detail::Parser p(text, opts);
    std::vector<Expr> comps;
    p.expect_punct("(");
    for (;;) {
        Expr e;
        e.root = p.parse_expr(e);
        comps.push_back(std::move(e));
        if (!p.accept_punct(",")) break;
    }
    p.expect_punct(")");
    p.expect_end();
    return comps;
}

// ---------------------------------------------------------------------------

struct ProbeArgs {
    FieldSource src;
    std::string at;
    std::vector<std::string> grid;
    std::string germ_file;
    bool fd_velocity = false;
    ProbeSchedule sched;
    std::string out = "probe_report.json";
    std::string run = "probe_run.json";
};

int run_probe(const ProbeArgs& a, std::uint64_t seed) {
    RunReport rep;
    rep.command = "probe";
    rep.seed = seed;
    const VectorFieldDef field = a.src.resolve();
    rep.inputs = a.src.describe();
    rep.inputs["eps0"] = a.sched.eps0;
    rep.inputs["ratio"] = a.sched.ratio;
    rep.inputs["count"] = a.sched.count;
    rep.inputs["tol"] = a.sched.tol;
    rep.inputs["stall_threshold"] = a.sched.stall_threshold;

    std::string summary;
    if (!a.at.empty()) {
        const Vec x = parse_vec(a.at);
        rep.inputs["at"] = a.at;
        ProbeReport pr;
        if (!a.germ_file.empty()) {
            rep.inputs["germ"] = a.germ_file;
            pr = probe_germ(field, parse_germ(read_file(a.germ_file)), x, a.sched,
                            a.fd_velocity);
        } else {
            pr = probe_ray(field, x, a.sched);
        }
        write_json_file(a.out, pr.to_json());
        rep.outputs.push_back(a.out);
        summary = std::string("probe: verdict=") + to_string(pr.verdict);
    } else if (!a.grid.empty()) {
        if (a.grid.size() != 2) throw UsageError("--grid expects BOX RES");
        const std::size_t colon = a.grid[0].find(':');
        if (colon == std::string::npos) throw UsageError("--grid BOX must be lo1,..:hi1,..");
        const Vec lo = parse_vec(a.grid[0].substr(0, colon));
        const Vec hi = parse_vec(a.grid[0].substr(colon + 1));
        const std::vector<int> res = parse_ints(a.grid[1]);
        rep.inputs["grid_box"] = a.grid[0];
        rep.inputs["grid_res"] = a.grid[1];
        const auto grid = probe_grid(field, lo, hi, res, a.sched);
        ordered_json rows = ordered_json::array();
        int flagged = 0;
        for (const auto& g : grid) {
            ordered_json row;
            row["point"] = g.point;
            row["verdict"] = g.verdict ? to_string(*g.verdict) : "Undefined";
            if (g.verdict && *g.verdict == Verdict::NotSelfContinuous) ++flagged;
            rows.push_back(row);
        }
        ordered_json j;
        j["grid"] = rows;
        write_json_file(a.out, j);
        rep.outputs.push_back(a.out);
        summary = "probe: " + std::to_string(grid.size()) + " grid points, " +
                  std::to_string(flagged) + " not self-continuous";
    } else {
        throw UsageError("one of --at or --grid is required");
    }
    rep.write(a.run, summary);
    return 0;
}

struct GermDirArgs {
    FieldSource src;
    std::string at;
    int n_dirs = 0;  // 0 = dimension default
    std::string speeds = "0.05,20,24";
    bool equilibrium = false;
    ProbeSchedule sched;
    std::string out = "germ_direction_report.json";
    std::string run = "germ_direction_run.json";
};

int run_germ_direction(const GermDirArgs& a, std::uint64_t seed) {
    RunReport rep;
    rep.command = "germ-direction";
    rep.seed = seed;
    const VectorFieldDef field = a.src.resolve();
    const Vec x = parse_vec(a.at);
    const Vec sp = parse_vec(a.speeds);
    if (sp.size() != 3) throw UsageError("--speeds expects smin,smax,count");
    const int n_dirs = a.n_dirs > 0 ? a.n_dirs : (field.dim() == 2 ? 64 : 512);
    rep.inputs = a.src.describe();
    rep.inputs["at"] = a.at;
    rep.inputs["dirs"] = n_dirs;
    rep.inputs["speeds"] = a.speeds;
    rep.inputs["equilibrium"] = a.equilibrium;
    const ExtensionSearch res = fit_germ_direction(
        field, x, n_dirs, sp[0], sp[1], static_cast<int>(sp[2]), a.sched, a.equilibrium);
    write_json_file(a.out, res.to_json());
    rep.outputs.push_back(a.out);
    rep.write(a.run, res.found ? std::string("germ-direction: extension found")
                               : std::string("germ-direction: no extension"));
    return 0;
}

struct IntegrateArgs {
    FieldSource src;
    std::string x0;
    double T = 1.0;
    double h = 0.1;
    std::string mode = "plain";
    std::string out = "integrate_path.csv";
    std::string report = "integrate_report.json";
    std::string run = "integrate_run.json";
};

int run_integrate(const IntegrateArgs& a, std::uint64_t seed) {
    RunReport rep;
    rep.command = "integrate";
    rep.seed = seed;
    const VectorFieldDef field = a.src.resolve();
    const Vec x0 = parse_vec(a.x0);
    StepConfig cfg;
    cfg.h = a.h;
    cfg.t_end = a.T;
    std::string mode_name = a.mode;
    if (a.mode == "plain") {
        cfg.mode = StepConfig::Mode::Plain;
    } else if (a.mode.rfind("snap:", 0) == 0) {
        cfg.mode = StepConfig::Mode::Snap;
        cfg.snap = parse_snap_arg(a.mode.substr(5), field.dim());
        mode_name = "snap";
    } else if (a.mode.rfind("germ:", 0) == 0) {
        cfg.mode = StepConfig::Mode::Germ;
        cfg.germ = parse_germ(read_file(a.mode.substr(5)));
        mode_name = "germ";
    } else {
        throw UsageError("--mode must be plain, snap:PRED[:TOL], or germ:FILE");
    }
    rep.inputs = a.src.describe();
    rep.inputs["x0"] = a.x0;
    rep.inputs["T"] = a.T;
    rep.inputs["h"] = a.h;
    rep.inputs["mode"] = a.mode;
    const StepReport sr = integrate(field, x0, cfg);
    write_csv(sr.path, a.out);
    write_json_file(a.report, sr.to_json(a.h, mode_name));
    rep.outputs.push_back(a.out);
    rep.outputs.push_back(a.report);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", sr.e_total);
    rep.write(a.run, "integrate: E_total=" + std::string(buf) +
                         (sr.truncated ? " (truncated)" : ""));
    return 0;
}

struct MinimizeArgs {
    FieldSource src;
    std::string x0;
    double T = 1.0;
    std::string end;
    int nodes = 64;
    long budget = 2'000'000;
    int restarts = 8;
    std::string init = "linear";
    int workers = 0;
    std::string out = "minimize_path.csv";
    std::string report = "minimize_report.json";
    std::string run = "minimize_run.json";
};

InitSpec parse_init_arg(const std::string& text, int dim) {
    if (text == "linear") return InitSpec::linear();
    if (text.rfind("germ-plain:", 0) == 0)
        return InitSpec::germ_plain(std::stod(text.substr(11)));
    if (text.rfind("germ-snap:", 0) == 0) {
        const std::string rest = text.substr(10);
        const std::size_t colon = rest.find(':');
        if (colon == std::string::npos)
            throw UsageError("--init germ-snap:H:PRED[:TOL]");
        const double h = std::stod(rest.substr(0, colon));
        return InitSpec::germ_snap(h, parse_snap_arg(rest.substr(colon + 1), dim));
    }
    if (text.rfind("path:", 0) == 0) return InitSpec::from_path(read_csv(text.substr(5)));
    throw UsageError("--init must be linear, germ-plain:H, germ-snap:H:PRED[:TOL], or path:FILE");
}

int run_minimize(const MinimizeArgs& a, std::uint64_t seed) {
    RunReport rep;
    rep.command = "minimize";
    rep.seed = seed;
    const VectorFieldDef field = a.src.resolve();
    const Vec x0 = parse_vec(a.x0);
    OptConfig cfg;
    cfg.n_nodes = a.nodes;
    cfg.budget = a.budget;
    cfg.restarts = a.restarts;
    cfg.seed = seed;
    cfg.init = parse_init_arg(a.init, field.dim());
    cfg.workers = a.workers > 0 ? a.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
    rep.inputs = a.src.describe();
    rep.inputs["x0"] = a.x0;
    rep.inputs["T"] = a.T;
    if (!a.end.empty()) rep.inputs["end"] = a.end;
    rep.inputs["nodes"] = a.nodes;
    rep.inputs["budget"] = a.budget;
    rep.inputs["restarts"] = a.restarts;
    rep.inputs["init"] = a.init;
    const OptResult res = a.end.empty()
                              ? minimize_fixed_start(field, x0, a.T, cfg)
                              : minimize_two_point(field, x0, parse_vec(a.end), a.T, cfg);
    write_csv(res.path, a.out);
    write_json_file(a.report, res.to_json(a.out));
    rep.outputs.push_back(a.out);
    rep.outputs.push_back(a.report);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", res.e_value);
    rep.write(a.run, "minimize: e_value=" + std::string(buf) +
                         " terminated_by=" + to_string(res.terminated_by));
    return 0;
}

struct MvalueArgs {
    FieldSource src;
    std::string x0;
    std::string rgrid;
    int nodes = 64;
    long budget = 2'000'000;
    int restarts = 8;
    std::string init = "linear";
    int workers = 0;
    std::string out = "mvalue.csv";
    std::string run = "mvalue_run.json";
};

int run_mvalue(const MvalueArgs& a, std::uint64_t seed) {
    RunReport rep;
    rep.command = "mvalue";
    rep.seed = seed;
    const VectorFieldDef field = a.src.resolve();
    const Vec x0 = parse_vec(a.x0);
    const Vec rgrid = parse_vec(a.rgrid);
    OptConfig cfg;
    cfg.n_nodes = a.nodes;
    cfg.budget = a.budget;
    cfg.restarts = a.restarts;
    cfg.seed = seed;
    cfg.init = parse_init_arg(a.init, field.dim());
    cfg.workers = a.workers > 0 ? a.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
    rep.inputs = a.src.describe();
    rep.inputs["x0"] = a.x0;
    rep.inputs["rgrid"] = a.rgrid;
    rep.inputs["nodes"] = a.nodes;
    rep.inputs["budget"] = a.budget;
    rep.inputs["restarts"] = a.restarts;
    rep.inputs["init"] = a.init;
    const auto m = value_function(field, x0, std::vector<double>(rgrid.begin(), rgrid.end()),
                                  cfg);
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    out << "r,m_estimate\n";
    char buf[64];
    for (const auto& [r, est] : m) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r, est);
        out << buf << "\n";
    }
    out.close();
    rep.outputs.push_back(a.out);
    std::snprintf(buf, sizeof(buf), "%.6g", m.back().second);
    rep.write(a.run, "mvalue: m(" + format_double(m.back().first) + ")=" + buf);
    return 0;
}

struct VerifyArgs {
    FieldSource src;
    std::string path_file;
    std::string family;
    std::string jlist = "2,8,32,128";
    double tol_e = 1e-3;
    double tol_sup = 0.05;
    std::string out = "verify_report.json";
    std::string run = "verify_run.json";
};

int run_verify(const VerifyArgs& a, std::uint64_t seed) {
    RunReport rep;
    rep.command = "verify";
    rep.seed = seed;
    const VectorFieldDef field = a.src.resolve();
    const Path x = read_csv(a.path_file);
    const std::vector<int> js = parse_ints(a.jlist);
    rep.inputs = a.src.describe();
    rep.inputs["path"] = a.path_file;
    rep.inputs["family"] = a.family;
    rep.inputs["jlist"] = a.jlist;
    rep.inputs["tol_e"] = a.tol_e;
    rep.inputs["tol_sup"] = a.tol_sup;

    std::function<Path(int)> family;
    if (a.family.rfind("expr:", 0) == 0) {
        ParseOptions opts;
        opts.scalar0 = "t";
        opts.scalar1 = "j";
        auto exprs = std::make_shared<std::vector<Expr>>(
            parse_expr_vector(a.family.substr(5), opts));
        if (static_cast<int>(exprs->size()) != field.dim())
            throw UsageError("family component count does not match the field dimension");
        const std::vector<double> times = x.times();
        const int dim = field.dim();
        family = [exprs, times, dim](int j) {
            std::vector<double> coords;
            coords.reserve(times.size() * dim);
            for (double t : times) {
                EvalEnv env{nullptr, 0, t, static_cast<double>(j)};
                for (const Expr& e : *exprs) coords.push_back(e.eval(env));
            }
            return Path(dim, times, std::move(coords));
        };
    } else if (a.family.rfind("files:", 0) == 0) {
        const std::string pattern = a.family.substr(6);
        if (pattern.find("{j}") == std::string::npos)
            throw UsageError("files: pattern needs a {j} placeholder");
        family = [pattern](int j) {
            std::string p = pattern;
            p.replace(p.find("{j}"), 3, std::to_string(j));
            return read_csv(p);
        };
    } else {
        throw UsageError("--family must be expr:(...) or files:PATTERN{j}");
    }

    const VerifyReport vr = verify_generalized(field, x, family, js, a.tol_e, a.tol_sup);
    write_json_file(a.out, vr.to_json());
    rep.outputs.push_back(a.out);
    rep.write(a.run, vr.accepted ? std::string("verify: accepted")
                                 : "verify: rejected (" + vr.failing_clause + ")");
    return 0;
}

struct SobolevArgs {
    FieldSource src;
    std::string x0;
    double rho = 1.0;
    int shells = 25;
    int angular = 128;
    std::string grad = "fd";
    std::string out = "sobolev_report.json";
    std::string shells_csv = "sobolev_shells.csv";
    std::string run = "sobolev_run.json";
};

int run_sobolev(const SobolevArgs& a, std::uint64_t seed) {
    RunReport rep;
    rep.command = "sobolev";
    rep.seed = seed;
    const VectorFieldDef field = a.src.resolve();
    const Vec x0 = parse_vec(a.x0);
    GradientProvider grad = GradientProvider::finite_difference();
    if (a.grad.rfind("analytic:", 0) == 0) {
        grad = parse_gradient(read_file(a.grad.substr(9)));
    } else if (a.grad == "fd") {
        grad = GradientProvider::finite_difference();
    } else if (a.grad.rfind("fd:", 0) == 0) {
        grad = GradientProvider::finite_difference(std::stod(a.grad.substr(3)));
    } else {
        throw UsageError("--grad must be analytic:FILE, fd, or fd:STEPSCALE");
    }
    rep.inputs = a.src.describe();
    rep.inputs["x0"] = a.x0;
    rep.inputs["rho"] = a.rho;
    rep.inputs["shells"] = a.shells;
    rep.inputs["angular"] = a.angular;
    rep.inputs["grad"] = a.grad;
    const IntegrabilityReport ir =
        check_integrability(field, grad, x0, a.rho, a.shells, a.angular, seed);
    write_json_file(a.out, ir.to_json());
    std::ofstream csv(a.shells_csv);
    if (!csv) throw std::runtime_error("cannot write " + a.shells_csv);
    csv << "r_inner,partial_integral\n";
    char buf[80];
    for (const auto& [r, v] : ir.shells) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r, v);
        csv << buf << "\n";
    }
    csv.close();
    rep.outputs.push_back(a.out);
    rep.outputs.push_back(a.shells_csv);
    rep.write(a.run, std::string("sobolev: verdict=") + to_string(ir.verdict));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-continuity toolkit for discontinuous ODE fields"};
    // --h is the step-size option of `integrate`; help lives on --help only.
    app.set_help_flag("--help", "print help and exit");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::uint64_t seed_flag = 0;
    CLI::Option* seed_opt =
        app.add_option("--seed", seed_flag, "RNG seed (SELFCONT_SEED overrides when absent)");

    auto add_schedule = [](CLI::App* cmd, ProbeSchedule& s) {
        cmd->add_option("--eps0", s.eps0, "largest probe eps");
        cmd->add_option("--ratio", s.ratio, "eps shrink ratio");
        cmd->add_option("--count", s.count, "number of eps samples");
        cmd->add_option("--tol", s.tol, "self-continuity tolerance");
        cmd->add_option("--stall", s.stall_threshold, "stall threshold");
    };

    ProbeArgs probe_args;
    CLI::App* probe_cmd = app.add_subcommand("probe", "probe self-continuity at a point or grid");
    probe_args.src.add_options(probe_cmd);
    probe_cmd->add_option("--at", probe_args.at, "probe point x1,x2,...");
    probe_cmd->add_option("--grid", probe_args.grid,
                          "grid sweep: BOX (lo1,..:hi1,..) and RES (n1,n2,...)")
        ->expected(2);
    probe_cmd->add_option("--germ", probe_args.germ_file, "germ curve file (germ form probe)");
    probe_cmd->add_flag("--fd-velocity", probe_args.fd_velocity,
                        "differentiate the germ position numerically");
    add_schedule(probe_cmd, probe_args.sched);
    probe_cmd->add_option("--out", probe_args.out, "report file");
    probe_cmd->add_option("--run-report", probe_args.run, "run report file");

    GermDirArgs gd_args;
    CLI::App* gd_cmd =
        app.add_subcommand("germ-direction", "search for a self-continuous extension value");
    gd_args.src.add_options(gd_cmd);
    gd_cmd->add_option("--at", gd_args.at, "extension point")->required();
    gd_cmd->add_option("--dirs", gd_args.n_dirs, "direction count (default 64/512)");
    gd_cmd->add_option("--speeds", gd_args.speeds, "speed grid smin,smax,count");
    gd_cmd->add_flag("--equilibrium", gd_args.equilibrium,
                     "accept speed 0 when nothing else qualifies");
    add_schedule(gd_cmd, gd_args.sched);
    gd_cmd->add_option("--out", gd_args.out, "report file");
    gd_cmd->add_option("--run-report", gd_args.run, "run report file");

    IntegrateArgs int_args;
    CLI::App* int_cmd = app.add_subcommand("integrate", "assemble a germ-step trajectory");
    int_args.src.add_options(int_cmd);
    int_cmd->add_option("--x0", int_args.x0, "initial point")->required();
    int_cmd->add_option("--T", int_args.T, "time horizon");
    int_cmd->add_option("--h", int_args.h, "step size");
    int_cmd->add_option("--mode", int_args.mode, "plain | snap:PRED[:TOL] | germ:FILE");
    int_cmd->add_option("--out", int_args.out, "path CSV");
    int_cmd->add_option("--report", int_args.report, "step report JSON");
    int_cmd->add_option("--run-report", int_args.run, "run report file");

    MinimizeArgs min_args;
    CLI::App* min_cmd =
        app.add_subcommand("minimize", "minimize the error functional over node positions");
    min_args.src.add_options(min_cmd);
    min_cmd->add_option("--x0", min_args.x0, "fixed initial point")->required();
    min_cmd->add_option("--T", min_args.T, "time horizon");
    min_cmd->add_option("--end", min_args.end, "fixed endpoint (two-point value)");
    min_cmd->add_option("--nodes", min_args.nodes, "node count");
    min_cmd->add_option("--budget", min_args.budget, "field evaluation budget");
    min_cmd->add_option("--restarts", min_args.restarts, "jittered restarts");
    min_cmd->add_option("--init", min_args.init,
                        "linear | germ-plain:H | germ-snap:H:PRED[:TOL] | path:FILE");
    min_cmd->add_option("--workers", min_args.workers, "restart worker threads");
    min_cmd->add_option("--out", min_args.out, "optimized path CSV");
    min_cmd->add_option("--report", min_args.report, "optimizer report JSON");
    min_cmd->add_option("--run-report", min_args.run, "run report file");

    MvalueArgs mv_args;
    CLI::App* mv_cmd = app.add_subcommand("mvalue", "value function m(r) over a horizon grid");
    mv_args.src.add_options(mv_cmd);
    mv_cmd->add_option("--x0", mv_args.x0, "fixed initial point")->required();
    mv_cmd->add_option("--rgrid", mv_args.rgrid, "increasing horizons r1,r2,...")->required();
    mv_cmd->add_option("--nodes", mv_args.nodes, "node count");
    mv_cmd->add_option("--budget", mv_args.budget, "field evaluation budget per horizon");
    mv_cmd->add_option("--restarts", mv_args.restarts, "jittered restarts");
    mv_cmd->add_option("--init", mv_args.init, "initialization (as in minimize)");
    mv_cmd->add_option("--workers", mv_args.workers, "restart worker threads");
    mv_cmd->add_option("--out", mv_args.out, "m(r) CSV");
    mv_cmd->add_option("--run-report", mv_args.run, "run report file");

    VerifyArgs ver_args;
    CLI::App* ver_cmd =
        app.add_subcommand("verify", "check a candidate generalized solution against a family");
    ver_args.src.add_options(ver_cmd);
    ver_cmd->add_option("--path", ver_args.path_file, "candidate path CSV")->required();
    ver_cmd->add_option("--family", ver_args.family,
                        "expr:(..expressions in t and j..) | files:PATTERN{j}")
        ->required();
    ver_cmd->add_option("--jlist", ver_args.jlist, "family indices");
    ver_cmd->add_option("--tol-e", ver_args.tol_e, "error tolerance at the largest j");
    ver_cmd->add_option("--tol-sup", ver_args.tol_sup, "sup-norm tolerance at the largest j");
    ver_cmd->add_option("--out", ver_args.out, "report file");
    ver_cmd->add_option("--run-report", ver_args.run, "run report file");

    SobolevArgs sob_args;
    CLI::App* sob_cmd =
        app.add_subcommand("sobolev", "singular-gradient integrability check on a ball");
    sob_args.src.add_options(sob_cmd);
    sob_cmd->add_option("--x0", sob_args.x0, "center of the ball")->required();
    sob_cmd->add_option("--rho", sob_args.rho, "ball radius");
    sob_cmd->add_option("--shells", sob_args.shells, "number of log-spaced shell radii");
    sob_cmd->add_option("--angular", sob_args.angular, "angular nodes per shell");
    sob_cmd->add_option("--grad", sob_args.grad, "analytic:FILE | fd | fd:STEPSCALE");
    sob_cmd->add_option("--out", sob_args.out, "report file");
    sob_cmd->add_option("--shells-csv", sob_args.shells_csv, "shell table CSV");
    sob_cmd->add_option("--run-report", sob_args.run, "run report file");

    CLI::App* zoo_cmd = app.add_subcommand("zoo", "catalog of example fields");
    CLI::App* zoo_list_cmd = zoo_cmd->add_subcommand("list", "list catalog entries");
    std::string export_name, export_dir = ".";
    CLI::App* zoo_export_cmd = zoo_cmd->add_subcommand("export", "write NAME.fld and NAME.json");
    zoo_export_cmd->add_option("name", export_name, "entry name")->required();
    zoo_export_cmd->add_option("--dir", export_dir, "output directory");
    std::vector<std::string> export_params;
    zoo_export_cmd->add_option("--param", export_params, "parameter override key=value")
        ->take_all();
    zoo_cmd->require_subcommand(1);

    // global options such as --seed may also appear after the subcommand
    std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* a) {
        a->fallthrough();
        for (CLI::App* sub : a->get_subcommands({})) enable_fallthrough(sub);
    };
    for (CLI::App* sub : app.get_subcommands({})) enable_fallthrough(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const std::uint64_t seed = resolve_seed(seed_opt, seed_flag);
        if (probe_cmd->parsed()) return run_probe(probe_args, seed);
        if (gd_cmd->parsed()) return run_germ_direction(gd_args, seed);
        if (int_cmd->parsed()) return run_integrate(int_args, seed);
        if (min_cmd->parsed()) return run_minimize(min_args, seed);
        if (mv_cmd->parsed()) return run_mvalue(mv_args, seed);
        if (ver_cmd->parsed()) return run_verify(ver_args, seed);
        if (sob_cmd->parsed()) return run_sobolev(sob_args, seed);
        if (zoo_cmd->parsed()) {
            if (zoo_list_cmd->parsed()) {
                for (const auto& [name, summary] : zoo_list())
                    std::cout << name << "\t" << summary << "\n";
                return 0;
            }
            if (zoo_export_cmd->parsed()) {
                const ZooEntry entry =
                    zoo_instantiate(export_name, parse_params(export_params));
                const auto [fld, json] = zoo_export(entry, export_dir);
                std::cout << "zoo export: " << fld << " " << json << "\n";
                return 0;
            }
        }
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 3;
    } catch (const EvalError& e) {
        std::cerr << "field error: " << e.what() << "\n";
        return e.kind() == EvalErrorKind::NonFinite ? 4 : 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
