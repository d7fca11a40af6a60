#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfcont/field.hpp"
#include "selfcont/germstep.hpp"
#include "selfcont/path.hpp"
#include "selfcont/vec.hpp"

namespace selfcont {

struct InitSpec {
    enum class Kind { LinearToGuess, GermPlain, GermSnap, PathGiven };
    Kind kind = Kind::LinearToGuess;
    double h = 0.05;                 // germ step size
    std::optional<SnapSpec> snap;    // for GermSnap
    std::optional<Path> path;        // for PathGiven (also used for files)

    static InitSpec linear() { return {}; }
    static InitSpec germ_plain(double h) { return {Kind::GermPlain, h, {}, {}}; }
    static InitSpec germ_snap(double h, SnapSpec snap) {
        return {Kind::GermSnap, h, std::move(snap), {}};
    }
    static InitSpec from_path(Path p) { return {Kind::PathGiven, 0.0, {}, std::move(p)}; }
};

struct OptConfig {
    int n_nodes = 64;             // uniform time grid
    long budget = 2'000'000;      // max field evaluations, split across restarts
    int restarts = 8;
    std::uint64_t seed = 0;
    InitSpec init;
    double step0 = 0.0;           // 0 = auto (0.1 * path scale)
    double shrink = 0.5;
    double min_step = 1e-9;
    int workers = 1;
    QuadratureSpec quad;

    void validate() const {
        if (n_nodes < 2) throw std::invalid_argument("n_nodes must be at least 2");
        if (budget <= 0) throw std::invalid_argument("budget must be positive");
        if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
        if (!(shrink > 0 && shrink < 1)) throw std::invalid_argument("shrink must be in (0,1)");
        if (!(min_step > 0)) throw std::invalid_argument("min_step must be positive");
    }
};

enum class Terminated { Budget, MinStep };

inline const char* to_string(Terminated t) {
    return t == Terminated::Budget ? "budget" : "min_step";
}

struct OptResult {
    Path path;
    double e_value = std::numeric_limits<double>::infinity();
    std::vector<std::pair<long, double>> trace;  // (evaluations, best_e), non-increasing
    std::vector<double> restarts_summary;        // best e per restart
    Terminated terminated_by = Terminated::MinStep;

    nlohmann::ordered_json to_json(const std::string& path_file = "") const {
        nlohmann::ordered_json j;
        j["e_value"] = e_value;
        j["terminated_by"] = to_string(terminated_by);
        nlohmann::ordered_json tr = nlohmann::ordered_json::array();
        for (const auto& [n, e] : trace) tr.push_back({n, e});
        j["trace"] = tr;
        j["restarts_summary"] = restarts_summary;
        j["path_file"] = path_file;
        return j;
    }
};

namespace detail {

template <FieldLike F>
struct CountingField {
    const F* base;
    mutable long count = 0;

    int dim() const { return base->dim(); }
    FieldStatus try_evaluate(std::span<const double> x, Vec& out) const {
        ++count;
        return base->try_evaluate(x, out);
    }
};

/// Uniform resampling of an arbitrary path onto n nodes over [0, T]; the
/// source path is held at its final position if shorter than T.
inline std::pair<std::vector<double>, std::vector<double>> resample(const Path& src, int n,
                                                                    double T) {
    std::vector<double> times(n);
    std::vector<double> coords;
    coords.reserve(static_cast<std::size_t>(n) * src.dim());
    for (int i = 0; i < n; ++i) {
        times[i] = T * i / (n - 1);
        const double t = std::min(times[i], src.t_end());
        Vec x = src.eval_at(std::max(t, src.t_begin()));
        coords.insert(coords.end(), x.begin(), x.end());
    }
    return {std::move(times), std::move(coords)};
}

template <FieldLike F>
std::pair<std::vector<double>, std::vector<double>> build_init(const F& field, const Vec& x0,
                                                               double T, const OptConfig& cfg,
                                                               const Vec* z_end) {
    const int dim = field.dim();
    const int n = cfg.n_nodes;
    std::vector<double> times(n), coords;
    switch (cfg.init.kind) {
        case InitSpec::Kind::LinearToGuess: {
            Vec guess;
            if (z_end) {
                guess = *z_end;
            } else {
                Vec fx(dim);
                guess = field.try_evaluate(x0, fx) == FieldStatus::Ok ? add_scaled(x0, T, fx)
                                                                      : x0;
            }
            coords.resize(static_cast<std::size_t>(n) * dim);
            for (int i = 0; i < n; ++i) {
                times[i] = T * i / (n - 1);
                const double s = static_cast<double>(i) / (n - 1);
                for (int d = 0; d < dim; ++d)
                    coords[static_cast<std::size_t>(i) * dim + d] =
                        x0[d] + s * (guess[d] - x0[d]);
            }
            return {std::move(times), std::move(coords)};
        }
        case InitSpec::Kind::GermPlain:
        case InitSpec::Kind::GermSnap: {
            StepConfig sc;
            sc.h = std::min(cfg.init.h, T);
            sc.t_end = T;
            if (cfg.init.kind == InitSpec::Kind::GermSnap) {
                sc.mode = StepConfig::Mode::Snap;
                sc.snap = cfg.init.snap;
            }
            const StepReport rep = integrate(field, x0, sc);
            return resample(rep.path, n, T);
        }
        case InitSpec::Kind::PathGiven:
            return resample(*cfg.init.path, n, T);
    }
    throw std::logic_error("unreachable");
}

/// Compass/pattern search over the free node coordinates of a fixed-grid
/// polyline. E is nonsmooth and discontinuous in the node positions, so the
/// search uses only strict-decrease acceptance and step shrinking. Segment
/// values are cached; a single-coordinate move touches at most two segments,
/// and totals are always re-summed in index order so results are bitwise
/// reproducible.
template <FieldLike F>
struct CompassRun {
    CountingField<F> field;
    std::vector<double> times;
    std::vector<double> coords;
    int dim;
    int free_lo, free_hi;  // node index range [free_lo, free_hi] is movable
    long budget;
    const OptConfig& cfg;

    std::vector<double> per_seg;
    double best_e = std::numeric_limits<double>::infinity();
    std::vector<std::pair<long, double>> trace;
    Terminated terminated = Terminated::MinStep;

    int n_nodes() const { return static_cast<int>(times.size()); }
    int n_segments() const { return n_nodes() - 1; }

    bool eval_segment(int i, const std::vector<double>& cs, double& out) const {
        std::span<const double> a(cs.data() + static_cast<std::size_t>(i) * dim, dim);
        std::span<const double> b(cs.data() + static_cast<std::size_t>(i + 1) * dim, dim);
        int depth = 0;
        Vec bad;
        return segment_error(field, a, b, times[i], times[i + 1], cfg.quad, out, depth, bad) ==
               FieldStatus::Ok;
    }

    double total() const {
        double s = 0.0;
        for (double v : per_seg) s += v;
        return s;
    }

    bool init_segments() {
        per_seg.assign(n_segments(), 0.0);
        for (int i = 0; i < n_segments(); ++i)
            if (!eval_segment(i, coords, per_seg[i])) return false;
        best_e = total();
        return true;
    }

    void run(double step0) {
        trace.emplace_back(field.count, best_e);
        double step = step0;
        std::vector<double> trial = coords;
        double seg_a = 0.0, seg_b = 0.0;
        while (step >= cfg.min_step) {
            if (field.count >= budget) {
                terminated = Terminated::Budget;
                break;
            }
            bool improved_in_cycle = false;
            for (int node = free_lo; node <= free_hi; ++node) {
                for (int d = 0; d < dim; ++d) {
                    for (double sgn : {+1.0, -1.0}) {
                        if (field.count >= budget) break;
                        const std::size_t idx = static_cast<std::size_t>(node) * dim + d;
                        trial[idx] = coords[idx] + sgn * step;
                        const int sa = node - 1, sb = node;
                        bool ok = true;
                        if (sa >= 0) ok = eval_segment(sa, trial, seg_a);
                        if (ok && sb < n_segments()) ok = eval_segment(sb, trial, seg_b);
                        if (ok) {
                            const double old_a = sa >= 0 ? per_seg[sa] : 0.0;
                            const double old_b = sb < n_segments() ? per_seg[sb] : 0.0;
                            if (sa >= 0) per_seg[sa] = seg_a;
                            if (sb < n_segments()) per_seg[sb] = seg_b;
                            const double cand = total();
                            if (cand < best_e) {
                                best_e = cand;
                                coords[idx] = trial[idx];
                                improved_in_cycle = true;
                            } else {
                                if (sa >= 0) per_seg[sa] = old_a;
                                if (sb < n_segments()) per_seg[sb] = old_b;
                                trial[idx] = coords[idx];
                            }
                        }
                        if (trial[idx] != coords[idx]) trial[idx] = coords[idx];
                    }
                }
            }
            if (field.count >= budget) {
                terminated = Terminated::Budget;
                trace.emplace_back(field.count, best_e);
                break;
            }
            if (!improved_in_cycle) {
                step *= cfg.shrink;
            } else {
                trace.emplace_back(field.count, best_e);
            }
        }
        if (trace.back().second != best_e || trace.back().first != field.count)
            trace.emplace_back(field.count, best_e);
    }
};

template <FieldLike F>
OptResult minimize_impl(const F& field, const Vec& x0, double T, const OptConfig& cfg,
                        const Vec* z_end) {
    cfg.validate();
    if (!(T > 0)) throw std::invalid_argument("horizon must be positive");
    const int dim = field.dim();
    if (static_cast<int>(x0.size()) != dim)
        throw std::invalid_argument("x0 dimension mismatch");
    if (z_end && static_cast<int>(z_end->size()) != dim)
        throw std::invalid_argument("endpoint dimension mismatch");

    auto [init_times, init_coords] = detail::build_init(field, x0, T, cfg, z_end);
    // Endpoints are pinned exactly.
    for (int d = 0; d < dim; ++d) init_coords[d] = x0[d];
    if (z_end)
        for (int d = 0; d < dim; ++d)
            init_coords[init_coords.size() - dim + d] = (*z_end)[d];

    double scale = 1.0;
    for (std::size_t i = 0; i < init_coords.size(); i += dim) {
        scale = std::max(scale, norm(std::span<const double>(init_coords.data() + i, dim)));
    }
    const double step0 = cfg.step0 > 0 ? cfg.step0 : 0.1 * scale;
    const long budget_per_restart = std::max<long>(1, cfg.budget / cfg.restarts);

    auto run_restart = [&](int r) {
        CompassRun<F> run{CountingField<F>{&field}, init_times, init_coords, dim,
                          1, cfg.n_nodes - (z_end ? 2 : 1), budget_per_restart, cfg};
        if (r > 0) {
            Rng rng = Rng(cfg.seed).split(r);
            for (int attempt = 0; attempt < 8; ++attempt) {
                run.coords = init_coords;
                const double amp = 0.1 * scale * std::pow(0.5, attempt);
                for (int node = run.free_lo; node <= run.free_hi; ++node)
                    for (int d = 0; d < dim; ++d)
                        run.coords[static_cast<std::size_t>(node) * dim + d] +=
                            amp * (2.0 * rng.uniform() - 1.0);
                if (run.init_segments()) break;
                run.coords = init_coords;  // fall back to the unjittered start
            }
            if (run.per_seg.empty() || !std::isfinite(run.best_e)) {
                run.coords = init_coords;
                if (!run.init_segments())
                    throw EvalError(EvalErrorKind::Undefined,
                                    "initialization path leaves the field domain");
            }
        } else {
            if (!run.init_segments())
                throw EvalError(EvalErrorKind::Undefined,
                                "initialization path leaves the field domain");
        }
        run.run(step0);
        return run;
    };

    std::vector<CompassRun<F>> runs;
    runs.reserve(cfg.restarts);
    if (cfg.workers > 1 && cfg.restarts > 1) {
        std::vector<std::future<CompassRun<F>>> futs;
        for (int r = 0; r < cfg.restarts; ++r)
            futs.push_back(std::async(std::launch::async, run_restart, r));
        for (auto& f : futs) runs.push_back(f.get());
    } else {
        for (int r = 0; r < cfg.restarts; ++r) runs.push_back(run_restart(r));
    }

    int best = 0;
    for (int r = 1; r < cfg.restarts; ++r)
        if (runs[r].best_e < runs[best].best_e) best = r;  // ties keep the lower index

    OptResult out;
    out.path = Path(dim, std::move(runs[best].times), std::move(runs[best].coords));
    out.e_value = runs[best].best_e;
    out.trace = std::move(runs[best].trace);
    out.terminated_by = runs[best].terminated;
    for (const auto& run : runs) out.restarts_summary.push_back(run.best_e);
    return out;
}

}  // namespace detail

/// Minimize E over paths on [0, T] with fixed start x0 and free endpoint;
/// the returned e_value estimates the value function m(T) from above.
template <FieldLike F>
OptResult minimize_fixed_start(const F& field, const Vec& x0, double T,
                               const OptConfig& cfg = {}) {
    return detail::minimize_impl(field, x0, T, cfg, nullptr);
}

/// Minimize E over paths joining x0 to z in time r; estimates the two-point
/// value G(z) from above. G is 1-Lipschitz in z for growth-bounded fields.
template <FieldLike F>
OptResult minimize_two_point(const F& field, const Vec& x0, const Vec& z, double r,
                             const OptConfig& cfg = {}) {
    return detail::minimize_impl(field, x0, r, cfg, &z);
}

/// m(r) estimates over an increasing grid, each warm-started from the
/// previous optimum extended by one germ step. Pass paths_out to keep the
/// per-horizon optimal paths.
template <FieldLike F>
std::vector<std::pair<double, double>> value_function(const F& field, const Vec& x0,
                                                      const std::vector<double>& r_grid,
                                                      const OptConfig& cfg = {},
                                                      std::vector<Path>* paths_out = nullptr) {
    for (std::size_t i = 0; i < r_grid.size(); ++i)
        if (!(r_grid[i] > 0) || (i > 0 && r_grid[i] <= r_grid[i - 1]))
            throw std::invalid_argument("r_grid must be positive and increasing");
    std::vector<std::pair<double, double>> out;
    OptConfig local = cfg;
    std::optional<Path> prev;
    for (double r : r_grid) {
        if (prev) {
            const int last = prev->n_nodes() - 1;
            Vec x_end = prev->point_vec(last);
            std::vector<double> times = prev->times();
            std::vector<double> coords = prev->coords();
            // Germ-step across the gap at the init's own step size (one giant
            // step leaves O(gap^2) error on curved fields). When the
            // configured init snaps to a manifold, the extension snaps too:
            // the previous optimum may end within a few ulps of the manifold,
            // and a plain step from there would sail across it.
            const double gap = r - prev->t_end();
            StepConfig sc;
            sc.h = std::min(cfg.init.kind == InitSpec::Kind::LinearToGuess ? gap : cfg.init.h,
                            gap);
            sc.t_end = gap;
            if (cfg.init.kind == InitSpec::Kind::GermSnap && cfg.init.snap) {
                sc.mode = StepConfig::Mode::Snap;
                sc.snap = cfg.init.snap;
            }
            const StepReport ext = integrate(field, x_end, sc);
            for (int i = 1; i < ext.path.n_nodes(); ++i) {
                times.push_back(prev->t_end() + ext.path.time(i));
                auto p = ext.path.point(i);
                coords.insert(coords.end(), p.begin(), p.end());
            }
            if (times.back() < r) {
                times.push_back(r);
                auto p = ext.path.point(ext.path.n_nodes() - 1);
                coords.insert(coords.end(), p.begin(), p.end());
            }
            local.init = InitSpec::from_path(Path(field.dim(), std::move(times), std::move(coords)));
        }
        OptResult res = minimize_fixed_start(field, x0, r, local);
        out.emplace_back(r, res.e_value);
        if (paths_out) paths_out->push_back(res.path);
        prev = std::move(res.path);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generalized-solution verification (surrogate)
// ---------------------------------------------------------------------------

struct VerifyReport {
    struct PerJ {
        int j;
        double e;
        double sup_dist;
    };
    std::vector<PerJ> per_j;
    bool accepted = false;
    std::string failing_clause;
    std::string note;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& p : per_j) rows.push_back({p.j, p.e, p.sup_dist});
        j["per_j"] = rows;
        j["accepted"] = accepted;
        if (!accepted) j["failing_clause"] = failing_clause;
        j["note"] = note;
        return j;
    }
};

/// Exact sup-norm distance between two piecewise-linear paths on the same
/// horizon (the distance is piecewise smooth and convex per merged segment,
/// so the maximum sits at merged node times).
inline double sup_distance(const Path& a, const Path& b) {
    std::vector<double> ts;
    ts.reserve(a.n_nodes() + b.n_nodes());
    ts.insert(ts.end(), a.times().begin(), a.times().end());
    ts.insert(ts.end(), b.times().begin(), b.times().end());
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    double worst = 0.0;
    for (double t : ts) worst = std::max(worst, dist(a.eval_at(t), b.eval_at(t)));
    return worst;
}

/// Surrogate check for the generalized-solution definition: the family's
/// error integrals must decrease to (at most) tol_e and the largest-j member
/// must lie within tol_sup of the candidate in sup norm. Sup-norm closeness
/// replaces weak convergence: strictly stronger on the convergence mode and
/// checkable; the report says so.
template <FieldLike F>
VerifyReport verify_generalized(const F& field, const Path& x,
                                const std::function<Path(int)>& family,
                                const std::vector<int>& j_list, double tol_e = 1e-3,
                                double tol_sup = 0.05, const QuadratureSpec& quad = {}) {
    if (j_list.empty()) throw std::invalid_argument("empty j list");
    VerifyReport report;
    report.note =
        "surrogate: weak W^{1,1} convergence replaced by sup-norm closeness at the "
        "largest j plus E(x_j) decreasing to tol_e; equi-integrability not checked";
    double prev_e = std::numeric_limits<double>::infinity();
    for (int j : j_list) {
        const Path xj = family(j);
        if (xj.t_begin() != x.t_begin() || xj.t_end() != x.t_end())
            throw std::invalid_argument("family member horizon mismatch at j=" +
                                        std::to_string(j));
        VerifyReport::PerJ row;
        row.j = j;
        row.e = error_functional(field, xj, quad).value;
        row.sup_dist = sup_distance(xj, x);
        if (row.e > prev_e + 1e-12 && report.failing_clause.empty())
            report.failing_clause = "E(x_j) increased at j=" + std::to_string(j);
        prev_e = row.e;
        report.per_j.push_back(row);
    }
    if (report.failing_clause.empty() && report.per_j.back().e > tol_e)
        report.failing_clause = "final E(x_j) above tol_e";
    if (report.failing_clause.empty() && report.per_j.back().sup_dist > tol_sup)
        report.failing_clause = "sup distance above tol_sup at largest j";
    report.accepted = report.failing_clause.empty();
    return report;
}

}  // namespace selfcont
