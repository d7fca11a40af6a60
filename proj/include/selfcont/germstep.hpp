#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfcont/field.hpp"
#include "selfcont/path.hpp"

namespace selfcont {

struct SnapSpec {
    Expr predicate;  // root is a comparison; the manifold is its zero set
    double snap_tol = 1e-9;
};

struct StepConfig {
    enum class Mode { Plain, Germ, Snap };
    double h = 0.1;
    double t_end = 1.0;
    Mode mode = Mode::Plain;
    std::optional<GermCurveDef> germ;
    std::optional<SnapSpec> snap;

    void validate() const {
        if (!(h > 0)) throw std::invalid_argument("step h must be positive");
        if (!(t_end > 0) || h > t_end) throw std::invalid_argument("need 0 < h <= t_end");
        if (mode == Mode::Germ && !germ) throw std::invalid_argument("germ mode needs a curve");
        if (mode == Mode::Snap) {
            if (!snap) throw std::invalid_argument("snap mode needs a predicate");
            if (!(snap->snap_tol > 0)) throw std::invalid_argument("snap_tol must be positive");
        }
    }
};

struct StepReport {
    Path path;
    double e_total = 0.0;
    std::vector<double> e_per_step;
    bool truncated = false;
    std::string truncation_reason;

    nlohmann::ordered_json to_json(double h, const std::string& mode) const {
        nlohmann::ordered_json j;
        j["h"] = h;
        j["mode"] = mode;
        j["steps"] = e_per_step.size();
        j["E_total"] = e_total;
        j["E_per_step"] = e_per_step;
        j["truncated"] = truncated;
        if (truncated) j["truncation_reason"] = truncation_reason;
        return j;
    }
};

namespace detail {

/// Locates the predicate zero along the segment [from, to] and polishes the
/// hit so the returned point satisfies the predicate residual g == 0 exactly
/// whenever a representable exact zero exists along the dominant coordinate
/// (always the case for coordinate-aligned manifolds like x1 == 0). Returns
/// the fraction theta in [0, 1] and the snapped point.
inline std::pair<double, Vec> locate_crossing(const Expr& pred, const Vec& from, const Vec& to) {
    const int dim = static_cast<int>(from.size());
    auto residual_at = [&](const Vec& p) {
        EvalEnv env{p.data(), dim};
        return predicate_residual(pred, env);
    };
    auto point_at = [&](double th) {
        Vec p(dim);
        for (int d = 0; d < dim; ++d) p[d] = from[d] + th * (to[d] - from[d]);
        return p;
    };

    const double g0 = residual_at(from);
    const double g1 = residual_at(to);
    double lo = 0.0, hi = 1.0;
    double th = 1.0;
    Vec p = to;
    if (g0 == 0.0) return {0.0, from};
    if (g1 != 0.0 && ((g0 < 0) != (g1 < 0))) {
        double glo = g0;
        for (int it = 0; it < 20; ++it) {
            const double mid = 0.5 * (lo + hi);
            const Vec pm = point_at(mid);
            const double gm = residual_at(pm);
            if (gm == 0.0) return {mid, pm};
            if ((gm < 0) == (glo < 0)) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        th = 0.5 * (lo + hi);
        p = point_at(th);
    }

    // Secant polish along the segment direction.
    const double dg = g1 - g0;
    if (dg != 0.0) {
        for (int it = 0; it < 4; ++it) {
            const double g = residual_at(p);
            if (g == 0.0) return {th, p};
            for (int d = 0; d < dim; ++d) p[d] -= g * (to[d] - from[d]) / dg;
        }
    }
    double g = residual_at(p);
    if (g == 0.0) return {th, p};

    // Last resort: bisect the bit representation of the dominant coordinate.
    int dom = 0;
    for (int d = 1; d < dim; ++d)
        if (std::fabs(to[d] - from[d]) > std::fabs(to[dom] - from[dom])) dom = d;
    auto with_coord = [&](double c) {
        Vec q = p;
        q[dom] = c;
        return q;
    };
    const double span = std::fabs(to[dom] - from[dom]) + 1e-300;
    double ca = p[dom] - span * 1e-6, cb = p[dom] + span * 1e-6;
    double ga = residual_at(with_coord(ca));
    double gb = residual_at(with_coord(cb));
    if (ga == 0.0) return {th, with_coord(ca)};
    if (gb == 0.0) return {th, with_coord(cb)};
    if ((ga < 0) != (gb < 0)) {
        for (int it = 0; it < 80; ++it) {
            const std::uint64_t ia = std::bit_cast<std::uint64_t>(ca);
            const std::uint64_t ib = std::bit_cast<std::uint64_t>(cb);
            double cm;
            if ((ca < 0) != (cb < 0)) {
                cm = 0.0;  // zero separates the signs and is representable
            } else {
                cm = std::bit_cast<double>(ia + (ib - ia) / 2);
                if (cm == ca || cm == cb) break;
            }
            const double gm = residual_at(with_coord(cm));
            if (gm == 0.0) return {th, with_coord(cm)};
            if ((gm < 0) == (ga < 0)) {
                ca = cm;
                ga = gm;
            } else {
                cb = cm;
                gb = gm;
            }
        }
    }
    return {th, p};  // residual is sub-ulp here; good enough for band predicates
}

}  // namespace detail

/// Assembles germs into a path. Plain mode appends linear steps
/// x + h f(x); germ mode appends chords of the supplied curve (8 interior
/// samples per step); snap mode runs plain steps but relocates any step that
/// reaches the named manifold onto it, so sliding segments can use the
/// on-manifold field value exactly.
///
/// Leaving the domain truncates the path (flagged, not an error); a
/// non-finite field value is an error.
template <FieldLike F>
StepReport integrate(const F& field, const Vec& x0, const StepConfig& cfg,
                     const QuadratureSpec& quad = {}) {
    cfg.validate();
    const int dim = field.dim();
    if (static_cast<int>(x0.size()) != dim) throw std::invalid_argument("x0 dimension mismatch");
    if (cfg.mode == StepConfig::Mode::Germ && cfg.germ->eps_max < cfg.h)
        throw std::invalid_argument("germ eps_max is smaller than the step size");

    StepReport report;
    std::vector<double> times{0.0};
    std::vector<double> coords(x0.begin(), x0.end());
    std::vector<std::pair<int, int>> step_segments;  // node index range per step

    Vec x = x0;
    double t = 0.0;
    Vec fx(dim);

    auto eval_or_stop = [&](const Vec& p) -> bool {
        const FieldStatus st = field.try_evaluate(p, fx);
        if (st == FieldStatus::Ok) return true;
        if (st == FieldStatus::NonFinite)
            throw EvalError(EvalErrorKind::NonFinite,
                            "non-finite field value at " + VectorFieldDef::point_str(p));
        report.truncated = true;
        report.truncation_reason =
            "field undefined at " + VectorFieldDef::point_str(p);
        return false;
    };

    const double tiny = 1e-12 * cfg.h;
    const long max_steps = 10 * static_cast<long>(std::ceil(cfg.t_end / cfg.h)) + 1000;
    long steps_taken = 0;
    while (t < cfg.t_end - tiny) {
        if (++steps_taken > max_steps) {
            report.truncated = true;
            report.truncation_reason = "step limit reached (manifold chatter?)";
            break;
        }
        const double h = std::min(cfg.h, cfg.t_end - t);
        if (!eval_or_stop(x)) break;
        const int first_new = static_cast<int>(times.size());

        if (cfg.mode == StepConfig::Mode::Germ) {
            bool stopped = false;
            Vec prev = x;
            for (int j = 1; j <= 8; ++j) {
                const double eps = h * j / 8.0;
                Vec pos = cfg.germ->eval_position(eps, x);
                if (!all_finite(pos))
                    throw EvalError(EvalErrorKind::NonFinite, "non-finite germ position");
                Vec probe_out(dim);
                if (field.try_evaluate(pos, probe_out) != FieldStatus::Ok) {
                    report.truncated = true;
                    report.truncation_reason =
                        "field undefined along germ chord at " +
                        VectorFieldDef::point_str(pos);
                    stopped = true;
                    break;
                }
                times.push_back(t + eps);
                coords.insert(coords.end(), pos.begin(), pos.end());
                prev = std::move(pos);
            }
            if (stopped) break;
            x = prev;
            t += h;
        } else {
            Vec next = add_scaled(x, h, fx);
            if (!all_finite(next))
                throw EvalError(EvalErrorKind::NonFinite, "non-finite step result");
            double t_next = t + h;
            if (cfg.mode == StepConfig::Mode::Snap) {
                EvalEnv env_from{x.data(), dim}, env_to{next.data(), dim};
                const double g0 = predicate_residual(cfg.snap->predicate, env_from);
                const double g1 = predicate_residual(cfg.snap->predicate, env_to);
                const bool crossing = (g0 < 0) != (g1 < 0) && g0 != 0.0 && g1 != 0.0;
                const bool near = std::fabs(g1) <= cfg.snap->snap_tol;
                if ((crossing || near) && g0 != 0.0) {
                    auto [theta, snapped] = detail::locate_crossing(cfg.snap->predicate, x, next);
                    if (theta > 0.0) {
                        next = std::move(snapped);
                        t_next = t + theta * h;
                    }
                }
            }
            Vec probe_out(dim);
            const FieldStatus st = field.try_evaluate(next, probe_out);
            if (st == FieldStatus::NonFinite)
                throw EvalError(EvalErrorKind::NonFinite,
                                "non-finite field value at " +
                                    VectorFieldDef::point_str(next));
            if (st != FieldStatus::Ok) {
                // Keep the node; the next iteration stops with a truncation flag.
            }
            times.push_back(t_next);
            coords.insert(coords.end(), next.begin(), next.end());
            x = std::move(next);
            t = t_next;
        }
        step_segments.emplace_back(first_new - 1, static_cast<int>(times.size()) - 1);
    }

    if (times.size() < 2) {
        // Could not take a single step; report a degenerate short hold.
        times.push_back(tiny);
        coords.insert(coords.end(), x0.begin(), x0.end());
    }
    report.path = Path(dim, std::move(times), std::move(coords));

    // Per-step residual integrals against the field.
    const QuadratureSpec q = quad;
    for (auto [a, b] : step_segments) {
        double e_step = 0.0;
        bool ok = true;
        for (int i = a; i < b; ++i) {
            double seg = 0.0;
            int depth = 0;
            Vec bad;
            if (detail::segment_error(field, report.path.point(i), report.path.point(i + 1),
                                      report.path.time(i), report.path.time(i + 1), q, seg,
                                      depth, bad) != FieldStatus::Ok) {
                ok = false;
                break;
            }
            e_step += seg;
        }
        if (!ok) break;
        report.e_per_step.push_back(e_step);
        report.e_total += e_step;
    }
    return report;
}

}  // namespace selfcont
