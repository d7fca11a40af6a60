#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfcont/field.hpp"
#include "selfcont/vec.hpp"

namespace selfcont {

/// Absolutely continuous path discretized as piecewise-linear nodes
/// (t_i, x_i). Node times are strictly increasing; interpolation between
/// nodes is affine. Immutable value semantics: the algebra below returns new
/// paths.
class Path {
  public:
    Path() = default;
    Path(int dim, std::vector<double> times, std::vector<double> coords)
        : dim_(dim), times_(std::move(times)), coords_(std::move(coords)) {
        validate();
    }

    static Path from_nodes(int dim, const std::vector<std::pair<double, Vec>>& nodes) {
        std::vector<double> ts;
        std::vector<double> xs;
        for (const auto& [t, x] : nodes) {
            ts.push_back(t);
            xs.insert(xs.end(), x.begin(), x.end());
        }
        return Path(dim, std::move(ts), std::move(xs));
    }

    int dim() const { return dim_; }
    int n_nodes() const { return static_cast<int>(times_.size()); }
    int n_segments() const { return n_nodes() - 1; }
    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }
    double duration() const { return t_end() - t_begin(); }
    double time(int i) const { return times_[i]; }
    std::span<const double> point(int i) const {
        return {coords_.data() + static_cast<std::size_t>(i) * dim_,
                static_cast<std::size_t>(dim_)};
    }
    Vec point_vec(int i) const {
        auto p = point(i);
        return Vec(p.begin(), p.end());
    }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& coords() const { return coords_; }

    Vec eval_at(double t) const {
        if (t < t_begin() || t > t_end())
            throw std::out_of_range("time " + format_double(t) + " outside [" +
                                    format_double(t_begin()) + ", " + format_double(t_end()) +
                                    "]");
        const int i = segment_of(t);
        const double s = (t - times_[i]) / (times_[i + 1] - times_[i]);
        auto a = point(i);
        auto b = point(i + 1);
        Vec out(dim_);
        for (int d = 0; d < dim_; ++d) out[d] = a[d] + s * (b[d] - a[d]);
        return out;
    }

    /// Index of the segment containing t (last segment for t == t_end).
    int segment_of(double t) const {
        const auto it = std::upper_bound(times_.begin(), times_.end(), t);
        int i = static_cast<int>(it - times_.begin()) - 1;
        return std::clamp(i, 0, n_segments() - 1);
    }

    Vec segment_velocity(int i) const {
        auto a = point(i);
        auto b = point(i + 1);
        const double dt = times_[i + 1] - times_[i];
        Vec v(dim_);
        for (int d = 0; d < dim_; ++d) v[d] = (b[d] - a[d]) / dt;
        return v;
    }

    double max_node_norm() const {
        double m = 0.0;
        for (int i = 0; i < n_nodes(); ++i) m = std::max(m, norm(point(i)));
        return m;
    }

  private:
    void validate() const {
        if (times_.size() < 2) throw std::invalid_argument("path needs at least two nodes");
        if (coords_.size() != times_.size() * static_cast<std::size_t>(dim_))
            throw std::invalid_argument("path coordinate count mismatch");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (!(times_[i] > times_[i - 1]))
                throw std::invalid_argument("path node times must be strictly increasing");
        if (!all_finite(coords_)) throw std::invalid_argument("path has non-finite coordinates");
    }

    int dim_ = 0;
    std::vector<double> times_;
    std::vector<double> coords_;
};

struct QuadratureSpec {
    int base_subsamples = 16;
    bool adaptive = true;
    int max_depth = 6;
    double jump_threshold = 0.5;

    void validate() const {
        if (base_subsamples < 1 || max_depth < 0 || !(jump_threshold > 0))
            throw std::invalid_argument("bad quadrature spec");
    }
};

struct ErrorBreakdown {
    double value = 0.0;
    std::vector<double> per_segment;
    std::vector<int> refinement_depth;  // deepest bisection used per segment
};

namespace detail {

/// Composite-midpoint quadrature of |v - f(p(t))| over one segment. The
/// integral value only ever uses panel midpoints, so nodes sitting exactly on
/// discontinuity manifolds are not double-counted. A panel bisects when the
/// field observed at its endpoints differs from its midpoint value by more
/// than the jump threshold; an endpoint where the field is undefined forces
/// refinement instead of failing, since only midpoints enter the value.
/// Returns a non-Ok status (with the offending point in bad_point) instead of
/// throwing.
template <FieldLike F>
FieldStatus segment_error(const F& field, std::span<const double> a, std::span<const double> b,
                          double t0, double t1, const QuadratureSpec& quad, double& out,
                          int& depth_used, Vec& bad_point) {
    const int dim = field.dim();
    const double dt = t1 - t0;
    Vec v(dim);
    for (int d = 0; d < dim; ++d) v[d] = (b[d] - a[d]) / dt;
    const double trigger = quad.jump_threshold * (1.0 + norm(v));

    Vec p(dim);
    auto point_at = [&](double s, Vec& dst) {
        for (int d = 0; d < dim; ++d) dst[d] = a[d] + s * (b[d] - a[d]);
    };

    struct EndSample {
        Vec f;
        bool ok = false;
    };
    struct Panel {
        double s0, s1;  // fractions of the segment
        EndSample lo, hi;
        int depth;
    };

    const int base = quad.base_subsamples;
    std::vector<EndSample> bounds;
    if (quad.adaptive) {
        bounds.resize(base + 1);
        for (int k = 0; k <= base; ++k) {
            point_at(static_cast<double>(k) / base, p);
            bounds[k].f.resize(dim);
            bounds[k].ok = field.try_evaluate(p, bounds[k].f) == FieldStatus::Ok;
        }
    } else {
        bounds.resize(base + 1);  // unused placeholders
    }

    std::vector<Panel> stack;
    stack.reserve(base + quad.max_depth + 4);
    for (int k = base - 1; k >= 0; --k)
        stack.push_back({static_cast<double>(k) / base, static_cast<double>(k + 1) / base,
                         bounds[k], bounds[k + 1], 0});

    double total = 0.0;
    depth_used = 0;
    Vec f_mid(dim);
    while (!stack.empty()) {
        Panel panel = std::move(stack.back());
        stack.pop_back();
        const double sm = 0.5 * (panel.s0 + panel.s1);
        point_at(sm, p);
        if (FieldStatus st = field.try_evaluate(p, f_mid); st != FieldStatus::Ok) {
            bad_point = p;
            return st;
        }
        bool split = false;
        if (quad.adaptive && panel.depth < quad.max_depth) {
            const double var_lo =
                panel.lo.ok ? dist(panel.lo.f, f_mid) : std::numeric_limits<double>::infinity();
            const double var_hi =
                panel.hi.ok ? dist(panel.hi.f, f_mid) : std::numeric_limits<double>::infinity();
            split = std::max(var_lo, var_hi) > trigger;
        }
        if (split) {
            depth_used = std::max(depth_used, panel.depth + 1);
            EndSample mid{f_mid, true};
            stack.push_back({sm, panel.s1, mid, panel.hi, panel.depth + 1});
            stack.push_back({panel.s0, sm, panel.lo, std::move(mid), panel.depth + 1});
        } else {
            double r = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double diff = v[d] - f_mid[d];
                r += diff * diff;
            }
            total += (panel.s1 - panel.s0) * dt * std::sqrt(r);
        }
    }
    out = total;
    return FieldStatus::Ok;
}

template <FieldLike F>
FieldStatus try_error_functional(const F& field, const Path& path, const QuadratureSpec& quad,
                                 ErrorBreakdown& out, Vec& bad_point) {
    out.per_segment.assign(path.n_segments(), 0.0);
    out.refinement_depth.assign(path.n_segments(), 0);
    for (int i = 0; i < path.n_segments(); ++i) {
        const FieldStatus st =
            segment_error(field, path.point(i), path.point(i + 1), path.time(i),
                          path.time(i + 1), quad, out.per_segment[i],
                          out.refinement_depth[i], bad_point);
        if (st != FieldStatus::Ok) return st;
    }
    double sum = 0.0;
    for (double s : out.per_segment) sum += s;
    out.value = sum;
    return FieldStatus::Ok;
}

}  // namespace detail

/// Discretized error functional E(p) = integral of |p'(t) - f(p(t))| dt.
template <FieldLike F>
ErrorBreakdown error_functional(const F& field, const Path& path,
                                const QuadratureSpec& quad = {}) {
    quad.validate();
    ErrorBreakdown out;
    Vec bad;
    const FieldStatus st = detail::try_error_functional(field, path, quad, out, bad);
    if (st != FieldStatus::Ok)
        throw EvalError(st == FieldStatus::NonFinite ? EvalErrorKind::NonFinite
                                                     : EvalErrorKind::Undefined,
                        "error functional: field not evaluable at quadrature sample " +
                            VectorFieldDef::point_str(bad));
    return out;
}

struct AprioriCheck {
    bool holds = false;
    double margin = 0.0;
    double bound_value = 0.0;
    double max_norm = 0.0;
};

/// Growth-bound a priori estimate |y(t)| <= (T*C0 + |x0| + E) * exp(C1*T),
/// checked at nodes and segment midpoints.
inline AprioriCheck apriori_bound_check(const Path& p, const GrowthBound& bound,
                                        double e_value) {
    bound.validate();
    AprioriCheck out;
    const double T = p.duration();
    const double x0 = norm(p.point(0));
    out.bound_value = (T * bound.c0 + x0 + e_value) * std::exp(bound.c1 * T);
    double m = 0.0;
    Vec mid(p.dim());
    for (int i = 0; i < p.n_nodes(); ++i) {
        m = std::max(m, norm(p.point(i)));
        if (i + 1 < p.n_nodes()) {
            auto a = p.point(i);
            auto b = p.point(i + 1);
            for (int d = 0; d < p.dim(); ++d) mid[d] = a[d] + 0.5 * (b[d] - a[d]);
            m = std::max(m, norm(mid));
        }
    }
    out.max_norm = m;
    out.margin = out.bound_value - m;
    out.holds = out.margin >= 0.0;
    return out;
}

/// Concatenation; the junction node must match bitwise (callers snap
/// explicitly). E is additive across the junction.
inline Path concat(const Path& p, const Path& q) {
    if (p.dim() != q.dim()) throw std::invalid_argument("concat: dimension mismatch");
    if (p.t_end() != q.t_begin())
        throw std::invalid_argument("concat: junction times differ");
    auto a = p.point(p.n_nodes() - 1);
    auto b = q.point(0);
    for (int d = 0; d < p.dim(); ++d)
        if (a[d] != b[d]) throw std::invalid_argument("concat: junction points differ");
    std::vector<double> times(p.times());
    std::vector<double> coords(p.coords());
    times.insert(times.end(), q.times().begin() + 1, q.times().end());
    coords.insert(coords.end(), q.coords().begin() + p.dim(), q.coords().end());
    return Path(p.dim(), std::move(times), std::move(coords));
}

/// Inserts a node at time t without changing the path as a function.
inline Path insert_node(const Path& p, double t) {
    if (t <= p.t_begin() || t >= p.t_end())
        throw std::out_of_range("insert_node: time outside the open horizon");
    for (int i = 0; i < p.n_nodes(); ++i)
        if (p.time(i) == t) throw std::invalid_argument("insert_node: node already at this time");
    const Vec x = p.eval_at(t);
    const int i = p.segment_of(t);
    std::vector<double> times(p.times());
    std::vector<double> coords(p.coords());
    times.insert(times.begin() + i + 1, t);
    coords.insert(coords.begin() + (i + 1) * p.dim(), x.begin(), x.end());
    return Path(p.dim(), std::move(times), std::move(coords));
}

/// Time rescaling y(tau) = x(r*tau/s): node times multiplied by s/r,
/// positions unchanged. The path must start at time 0.
inline Path rescale(const Path& p, double s) {
    if (p.t_begin() != 0.0) throw std::invalid_argument("rescale: path must start at time 0");
    if (!(s > 0.0)) throw std::invalid_argument("rescale: target duration must be positive");
    const double factor = s / p.t_end();
    std::vector<double> times(p.times());
    for (double& t : times) t *= factor;
    return Path(p.dim(), std::move(times), std::vector<double>(p.coords()));
}

// ---------------------------------------------------------------------------
// CSV round trip: header "t,x1,...,xN", one node per row, 17 significant
// digits.
// ---------------------------------------------------------------------------

inline void write_csv(const Path& p, const std::string& filename) {
    std::ofstream out(filename);
    if (!out) throw std::runtime_error("cannot open " + filename + " for writing");
    out << "t";
    for (int d = 1; d <= p.dim(); ++d) out << ",x" << d;
    out << "\n";
    char buf[64];
    for (int i = 0; i < p.n_nodes(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.time(i));
        out << buf;
        auto x = p.point(i);
        for (int d = 0; d < p.dim(); ++d) {
            std::snprintf(buf, sizeof(buf), "%.17g", x[d]);
            out << "," << buf;
        }
        out << "\n";
    }
}

inline Path read_csv(const std::string& filename) {
    std::ifstream in(filename);
    if (!in) throw std::runtime_error("cannot open " + filename);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(filename + ": empty file");
    int dim = 0;
    {
        std::size_t pos = 0;
        int fields = 0;
        while (pos != std::string::npos) {
            ++fields;
            pos = line.find(',', pos);
            if (pos != std::string::npos) ++pos;
        }
        dim = fields - 1;
        if (dim < 1) throw std::runtime_error(filename + ": bad CSV header");
    }
    std::vector<double> times, coords;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        for (int col = 0; col <= dim; ++col) {
            std::size_t next = line.find(',', pos);
            const std::string cell =
                line.substr(pos, next == std::string::npos ? next : next - pos);
            const double v = std::stod(cell);
            if (col == 0)
                times.push_back(v);
            else
                coords.push_back(v);
            if (next == std::string::npos && col < dim)
                throw std::runtime_error(filename + ": short CSV row");
            pos = next + 1;
        }
    }
    return Path(dim, std::move(times), std::move(coords));
}

}  // namespace selfcont
