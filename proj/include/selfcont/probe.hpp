#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfcont/field.hpp"
#include "selfcont/vec.hpp"

namespace selfcont {

struct ProbeSchedule {
    double eps0 = 1e-2;
    double ratio = 0.5;
    int count = 24;
    double tol = 1e-6;
    double stall_threshold = 1e-3;

    void validate() const {
        if (!(eps0 > 0)) throw std::invalid_argument("eps0 must be positive");
        if (!(ratio > 0 && ratio < 1)) throw std::invalid_argument("ratio must be in (0,1)");
        if (count < 4) throw std::invalid_argument("count must be at least 4");
        if (!(tol > 0) || !(stall_threshold > 0))
            throw std::invalid_argument("tolerances must be positive");
        if (!(eps0 * std::pow(ratio, count - 1) > 1e-300))
            throw std::invalid_argument("schedule underflows");
    }
};

enum class Verdict { SelfContinuous, NotSelfContinuous, Inconclusive, TriviallySelfContinuous };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::SelfContinuous: return "SelfContinuous";
        case Verdict::NotSelfContinuous: return "NotSelfContinuous";
        case Verdict::Inconclusive: return "Inconclusive";
        case Verdict::TriviallySelfContinuous: return "TriviallySelfContinuous";
    }
    return "?";
}

struct ProbeReport {
    Vec point;
    std::vector<std::pair<double, double>> residuals;  // (eps_k, d_k), eps decreasing
    Verdict verdict = Verdict::Inconclusive;
    std::optional<Vec> limit_estimate;
    std::string diagnostics;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["point"] = point;
        nlohmann::ordered_json res = nlohmann::ordered_json::array();
        for (const auto& [eps, d] : residuals) res.push_back({eps, d});
        j["residuals"] = res;
        j["verdict"] = to_string(verdict);
        if (limit_estimate)
            j["limit_estimate"] = *limit_estimate;
        else
            j["limit_estimate"] = nullptr;
        j["diagnostics"] = diagnostics;
        return j;
    }
};

/// Verdict as a pure function of the residual sequence. A one-sided limit can
/// only be sampled, so the outcome is ternary: the tail must either sit below
/// tol (SelfContinuous) or sit above the stall threshold without decaying
/// (NotSelfContinuous); anything else is Inconclusive.
inline Verdict decide_verdict(const std::vector<std::pair<double, double>>& residuals,
                              const ProbeSchedule& sched) {
    if (residuals.empty()) return Verdict::Inconclusive;
    const int tail_len =
        std::min<int>(static_cast<int>(residuals.size()),
                      std::max(4, sched.count / 4));
    const auto tail_begin = residuals.end() - tail_len;
    double lo = tail_begin->second, hi = tail_begin->second;
    bool nondecreasing = true;
    for (auto it = tail_begin; it != residuals.end(); ++it) {
        lo = std::min(lo, it->second);
        hi = std::max(hi, it->second);
        if (it != tail_begin && it->second < std::prev(it)->second) nondecreasing = false;
    }
    if (hi <= sched.tol) return Verdict::SelfContinuous;
    const bool flat = (hi - lo) <= 0.1 * lo;
    if (lo >= sched.stall_threshold && (nondecreasing || flat))
        return Verdict::NotSelfContinuous;
    return Verdict::Inconclusive;
}

namespace detail {

/// Shrinks eps until the first sample is admissible (up to 40 shrinks).
/// Returns false if no admissible eps exists.
template <class Admissible>
bool settle_eps0(double& eps, double ratio, const Admissible& ok) {
    for (int tries = 0; tries < 40; ++tries) {
        if (ok(eps)) return true;
        eps *= ratio;
    }
    return false;
}

inline std::optional<Vec> estimate_limit(const std::vector<Vec>& tail_samples,
                                         const Vec& fallback, Verdict verdict) {
    if (verdict == Verdict::SelfContinuous || verdict == Verdict::TriviallySelfContinuous)
        return fallback;
    if (tail_samples.size() < 2) return std::nullopt;
    double spread = 0.0;
    for (std::size_t i = 1; i < tail_samples.size(); ++i)
        spread = std::max(spread, dist(tail_samples[i], tail_samples[i - 1]));
    if (spread <= 0.01 * (1.0 + norm(tail_samples.back()))) return tail_samples.back();
    return std::nullopt;
}

}  // namespace detail

/// Ray form: d_k = |f(x + eps_k f(x)) - f(x)| over the shrinking schedule.
/// Vanishing f(x) makes the condition void, reported as
/// TriviallySelfContinuous without any further field evaluation.
template <FieldLike F>
ProbeReport probe_ray(const F& field, const Vec& x, const ProbeSchedule& sched = {}) {
    sched.validate();
    ProbeReport report;
    report.point = x;

    Vec fx(field.dim());
    switch (field.try_evaluate(x, fx)) {
        case FieldStatus::Ok: break;
        case FieldStatus::OutsideDomain:
            throw EvalError(EvalErrorKind::OutsideDomain, "probe point outside domain");
        case FieldStatus::Undefined:
            throw EvalError(EvalErrorKind::Undefined, "field undefined at probe point");
        case FieldStatus::NonFinite:
            throw EvalError(EvalErrorKind::NonFinite, "non-finite field value at probe point");
    }

    if (norm(fx) == 0.0) {
        report.verdict = Verdict::TriviallySelfContinuous;
        report.limit_estimate = fx;
        report.diagnostics = "f vanishes at the point; the ray condition is void";
        return report;
    }

    Vec sample(field.dim()), fs(field.dim());
    auto admissible = [&](double eps) {
        for (int d = 0; d < field.dim(); ++d) sample[d] = x[d] + eps * fx[d];
        return field.try_evaluate(sample, fs) == FieldStatus::Ok;
    };

    double eps0 = sched.eps0;
    if (!detail::settle_eps0(eps0, sched.ratio, admissible)) {
        report.verdict = Verdict::Inconclusive;
        report.diagnostics = "no admissible eps: every ray sample left the domain";
        return report;
    }

    int skipped = 0;
    std::vector<Vec> tail_samples;
    const int tail_len = std::max(4, sched.count / 4);
    double eps = eps0;
    for (int k = 0; k < sched.count; ++k, eps *= sched.ratio) {
        if (!admissible(eps)) {
            ++skipped;
            continue;
        }
        report.residuals.emplace_back(eps, dist(fs, fx));
        tail_samples.push_back(fs);
        if (static_cast<int>(tail_samples.size()) > tail_len)
            tail_samples.erase(tail_samples.begin());
    }
    if (report.residuals.empty()) {
        report.verdict = Verdict::Inconclusive;
        report.diagnostics = "all schedule samples were inadmissible";
        return report;
    }
    report.verdict = decide_verdict(report.residuals, sched);
    report.limit_estimate = detail::estimate_limit(tail_samples, fx, report.verdict);
    if (skipped > 0)
        report.diagnostics = std::to_string(skipped) + " schedule samples skipped (undefined)";
    if (eps0 != sched.eps0)
        report.diagnostics += (report.diagnostics.empty() ? "" : "; ") +
                              ("eps0 shrunk to " + format_double(eps0));
    return report;
}

/// Germ form: d_k = |phi'(eps_k; x) - f(phi(eps_k; x))|. The germ must pass
/// through x with velocity f(x) at eps = 0 (1e-9 tolerance, rejected
/// otherwise). With fd_velocity the velocity expressions are ignored and
/// phi' is taken by central differences.
template <FieldLike F>
ProbeReport probe_germ(const F& field, const GermCurveDef& germ, const Vec& x,
                       const ProbeSchedule& sched = {}, bool fd_velocity = false) {
    sched.validate();
    if (germ.dim != field.dim()) throw std::invalid_argument("germ dimension mismatch");
    ProbeReport report;
    report.point = x;

    Vec fx(field.dim());
    if (field.try_evaluate(x, fx) != FieldStatus::Ok)
        throw EvalError(EvalErrorKind::Undefined, "field undefined at probe point");
    const Vec pos0 = germ.eval_position(0.0, x);
    const Vec vel0 = fd_velocity ? germ.fd_velocity(0.0, x) : germ.eval_velocity(0.0, x);
    if (dist(pos0, x) > 1e-9)
        throw std::invalid_argument("germ position at eps=0 does not match the base point");
    if (dist(vel0, fx) > (fd_velocity ? 1e-6 : 1e-9))
        throw std::invalid_argument("germ velocity at eps=0 does not match f(base point)");

    Vec fs(field.dim());
    Vec pos, vel;
    auto admissible = [&](double eps) {
        if (eps > germ.eps_max) return false;
        pos = germ.eval_position(eps, x);
        return field.try_evaluate(pos, fs) == FieldStatus::Ok;
    };

    double eps0 = sched.eps0;
    if (!detail::settle_eps0(eps0, sched.ratio, admissible)) {
        report.verdict = Verdict::Inconclusive;
        report.diagnostics = "no admissible eps along the germ curve";
        return report;
    }

    int skipped = 0;
    std::vector<Vec> tail_samples;
    const int tail_len = std::max(4, sched.count / 4);
    double eps = eps0;
    for (int k = 0; k < sched.count; ++k, eps *= sched.ratio) {
        if (!admissible(eps)) {
            ++skipped;
            continue;
        }
        vel = fd_velocity ? germ.fd_velocity(eps, x) : germ.eval_velocity(eps, x);
        report.residuals.emplace_back(eps, dist(vel, fs));
        tail_samples.push_back(fs);
        if (static_cast<int>(tail_samples.size()) > tail_len)
            tail_samples.erase(tail_samples.begin());
    }
    if (report.residuals.empty()) {
        report.verdict = Verdict::Inconclusive;
        report.diagnostics = "all germ samples were inadmissible";
        return report;
    }
    report.verdict = decide_verdict(report.residuals, sched);
    report.limit_estimate = detail::estimate_limit(tail_samples, fx, report.verdict);
    if (skipped > 0)
        report.diagnostics = std::to_string(skipped) + " germ samples skipped";
    return report;
}

// ---------------------------------------------------------------------------
// Pointwise self-continuous extension search
// ---------------------------------------------------------------------------

struct ExtensionCandidate {
    Vec direction;
    double speed = 0.0;
    double tail_residual = 0.0;
    bool equilibrium = false;
};

struct ExtensionSearch {
    std::optional<ExtensionCandidate> found;
    double best_residual = std::numeric_limits<double>::infinity();
    Vec best_direction;
    double best_speed = 0.0;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["found"] = found.has_value();
        if (found) {
            j["direction"] = found->direction;
            j["speed"] = found->speed;
            j["tail_residual"] = found->tail_residual;
            j["equilibrium"] = found->equilibrium;
        } else {
            j["best_residual"] = best_residual;
            j["best_direction"] = best_direction;
            j["best_speed"] = best_speed;
        }
        return j;
    }
};

namespace detail {

inline std::vector<Vec> direction_grid(int dim, int n_dirs) {
    std::vector<Vec> dirs;
    dirs.reserve(n_dirs);
    if (dim == 2) {
        for (int i = 0; i < n_dirs; ++i) {
            const double th = 2.0 * std::numbers::pi * i / n_dirs;
            dirs.push_back({std::cos(th), std::sin(th)});
        }
    } else {
        // Fibonacci sphere
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < n_dirs; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / n_dirs;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double th = golden * i;
            dirs.push_back({r * std::cos(th), r * std::sin(th), z});
        }
    }
    return dirs;
}

inline Vec rotate_in_plane(const Vec& e, const Vec& t, double angle) {
    Vec out(e.size());
    const double c = std::cos(angle), s = std::sin(angle);
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = c * e[i] + s * t[i];
    const double n = norm(out);
    for (double& v : out) v /= n;
    return out;
}

inline std::vector<Vec> refine_directions(const Vec& best, int dim, double spacing) {
    std::vector<Vec> out;
    if (dim == 2) {
        const Vec t = {-best[1], best[0]};
        for (double a : {-spacing / 2, spacing / 2, -spacing / 4, spacing / 4})
            out.push_back(rotate_in_plane(best, t, a));
    } else {
        // two deterministic tangent directions
        int axis = 0;
        for (int i = 1; i < 3; ++i)
            if (std::fabs(best[i]) < std::fabs(best[axis])) axis = i;
        Vec u(3, 0.0);
        u[axis] = 1.0;
        const double proj = u[0] * best[0] + u[1] * best[1] + u[2] * best[2];
        for (int i = 0; i < 3; ++i) u[i] -= proj * best[i];
        double un = norm(u);
        for (double& v : u) v /= un;
        Vec w = {best[1] * u[2] - best[2] * u[1], best[2] * u[0] - best[0] * u[2],
                 best[0] * u[1] - best[1] * u[0]};
        for (double a : {spacing / 2, spacing / 4}) {
            out.push_back(rotate_in_plane(best, u, a));
            out.push_back(rotate_in_plane(best, u, -a));
            out.push_back(rotate_in_plane(best, w, a));
            out.push_back(rotate_in_plane(best, w, -a));
        }
    }
    return out;
}

}  // namespace detail

/// Searches unit directions and geometric speeds for a value v = s*e such
/// that f(x + eps*v) -> v along the tail of the schedule; this is the
/// candidate self-continuous extension f(x) := v at a point where f is
/// undefined or incompatible. The speed grid snaps its middle entry to
/// exactly 1 whenever the range brackets it.
template <FieldLike F>
ExtensionSearch fit_germ_direction(const F& field, const Vec& x, int n_dirs, double s_min,
                                   double s_max, int n_speeds, const ProbeSchedule& sched = {},
                                   bool allow_equilibrium = false) {
    sched.validate();
    const int dim = field.dim();
    if (dim != 2 && dim != 3)
        throw std::invalid_argument("direction grids support dimensions 2 and 3 only");
    if (n_dirs < 4 || n_speeds < 2 || !(s_min > 0) || !(s_max > s_min))
        throw std::invalid_argument("bad direction/speed grid");

    std::vector<double> speeds(n_speeds);
    const double step = (std::log(s_max) - std::log(s_min)) / (n_speeds - 1);
    for (int i = 0; i < n_speeds; ++i) speeds[i] = std::exp(std::log(s_min) + i * step);
    if (s_min <= 1.0 && s_max >= 1.0) {
        int closest = 0;
        for (int i = 1; i < n_speeds; ++i)
            if (std::fabs(std::log(speeds[i])) < std::fabs(std::log(speeds[closest])))
                closest = i;
        speeds[closest] = 1.0;
    }

    // tail of the schedule: the last quarter
    std::vector<double> tail_eps;
    {
        double eps = sched.eps0;
        for (int k = 0; k < sched.count; ++k, eps *= sched.ratio)
            if (k >= sched.count - std::max(1, sched.count / 4)) tail_eps.push_back(eps);
    }

    Vec sample(dim), fs(dim);
    auto tail_residual = [&](const Vec& e, double s) -> double {
        double worst = 0.0;
        for (double eps : tail_eps) {
            for (int d = 0; d < dim; ++d) sample[d] = x[d] + eps * s * e[d];
            if (field.try_evaluate(sample, fs) != FieldStatus::Ok)
                return std::numeric_limits<double>::infinity();
            double r = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double diff = fs[d] - s * e[d];
                r += diff * diff;
            }
            worst = std::max(worst, std::sqrt(r));
        }
        return worst;
    };

    ExtensionSearch out;
    auto scan = [&](const std::vector<Vec>& dirs) {
        for (const Vec& e : dirs) {
            for (double s : speeds) {
                const double r = tail_residual(e, s);
                if (r < out.best_residual) {
                    out.best_residual = r;
                    out.best_direction = e;
                    out.best_speed = s;
                }
            }
        }
    };
    scan(detail::direction_grid(dim, n_dirs));
    if (!out.best_direction.empty()) {
        const double spacing =
            dim == 2 ? 2.0 * std::numbers::pi / n_dirs : std::sqrt(4.0 * std::numbers::pi / n_dirs);
        scan(detail::refine_directions(out.best_direction, dim, spacing));
    }

    if (out.best_residual <= sched.tol * 10.0) {
        out.found = ExtensionCandidate{out.best_direction, out.best_speed, out.best_residual,
                                       false};
    } else if (allow_equilibrium) {
        // f(x) := 0 makes the condition void at x.
        out.found = ExtensionCandidate{Vec(dim, 0.0), 0.0, 0.0, true};
    }
    return out;
}

struct GridVerdict {
    Vec point;
    std::optional<Verdict> verdict;  // empty when the field is undefined there
};

/// probe_ray on every node of a regular grid over the box [lo, hi].
template <FieldLike F>
std::vector<GridVerdict> probe_grid(const F& field, const Vec& lo, const Vec& hi,
                                    const std::vector<int>& resolution,
                                    const ProbeSchedule& sched = {}) {
    const int dim = field.dim();
    if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim ||
        static_cast<int>(resolution.size()) != dim)
        throw std::invalid_argument("grid specification dimension mismatch");
    for (int r : resolution)
        if (r < 2) throw std::invalid_argument("grid resolution must be at least 2 per axis");

    long total = 1;
    for (int r : resolution) total *= r;
    std::vector<GridVerdict> out;
    out.reserve(total);
    std::vector<int> idx(dim, 0);
    Vec x(dim), fx(dim);
    for (long k = 0; k < total; ++k) {
        for (int d = 0; d < dim; ++d)
            x[d] = lo[d] + idx[d] * (hi[d] - lo[d]) / (resolution[d] - 1);
        GridVerdict gv;
        gv.point = x;
        if (field.try_evaluate(x, fx) == FieldStatus::Ok)
            gv.verdict = probe_ray(field, x, sched).verdict;
        out.push_back(std::move(gv));
        for (int d = dim - 1; d >= 0; --d) {
            if (++idx[d] < resolution[d]) break;
            idx[d] = 0;
        }
    }
    return out;
}

}  // namespace selfcont
