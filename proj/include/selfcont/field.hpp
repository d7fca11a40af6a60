#pragma once

#include <concepts>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfcont/expr.hpp"
#include "selfcont/vec.hpp"

namespace selfcont {

/// Anything that can be sampled like a Borel vector field. Wrappers (eval
/// counters, scaled fields, test lambdas) model the same concept so the
/// numerical machinery stays independent of the expression backend.
enum class FieldStatus { Ok, OutsideDomain, Undefined, NonFinite };

template <class F>
concept FieldLike = requires(const F& f, std::span<const double> x, Vec& out) {
    { f.dim() } -> std::convertible_to<int>;
    { f.try_evaluate(x, out) } -> std::same_as<FieldStatus>;
};

struct DomainSpec {
    enum class Kind { AllSpace, Box, Ball };
    Kind kind = Kind::AllSpace;
    Vec lo, hi;          // Box
    Vec center;          // Ball
    double radius = 0.0; // Ball
    std::optional<Expr> excluded;  // predicate marking undefined points

    bool contains(std::span<const double> x) const {
        switch (kind) {
            case Kind::AllSpace: return true;
            case Kind::Box:
                for (std::size_t i = 0; i < lo.size(); ++i)
                    if (x[i] < lo[i] || x[i] > hi[i]) return false;
                return true;
            case Kind::Ball: {
                double s = 0.0;
                for (std::size_t i = 0; i < center.size(); ++i) {
                    const double d = x[i] - center[i];
                    s += d * d;
                }
                return s <= radius * radius;
            }
        }
        return true;
    }
};

/// Linear growth constants: |f(z)| <= c1*|z| + c0, c0 strictly positive.
struct GrowthBound {
    double c1 = 0.0;
    double c0 = 1.0;

    void validate() const {
        if (!(c0 > 0.0) || c1 < 0.0)
            throw std::invalid_argument("growth bound needs c0 > 0 and c1 >= 0");
    }
};

struct FieldOverride {
    Expr predicate;  // root is a comparison node
    std::vector<Expr> components;
};

class VectorFieldDef {
  public:
    VectorFieldDef() = default;
    VectorFieldDef(int dim, std::vector<Expr> components, std::vector<FieldOverride> overrides,
                   DomainSpec domain = {})
        : dim_(dim),
          components_(std::move(components)),
          overrides_(std::move(overrides)),
          domain_(std::move(domain)) {}

    int dim() const { return dim_; }
    const DomainSpec& domain() const { return domain_; }
    DomainSpec& domain() { return domain_; }
    const std::vector<Expr>& components() const { return components_; }
    const std::vector<FieldOverride>& overrides() const { return overrides_; }

    /// Override branches are tried in declaration order before the excluded
    /// predicate and the default components.
    FieldStatus try_evaluate(std::span<const double> x, Vec& out) const {
        if (!domain_.contains(x)) return FieldStatus::OutsideDomain;
        EvalEnv env{x.data(), dim_};
        for (const FieldOverride& ov : overrides_) {
            if (predicate_holds(ov.predicate, env)) {
                out.resize(dim_);
                for (int i = 0; i < dim_; ++i) out[i] = ov.components[i].eval(env);
                return all_finite(out) ? FieldStatus::Ok : FieldStatus::NonFinite;
            }
        }
        if (domain_.excluded && predicate_holds(*domain_.excluded, env))
            return FieldStatus::Undefined;
        out.resize(dim_);
        for (int i = 0; i < dim_; ++i) out[i] = components_[i].eval(env);
        return all_finite(out) ? FieldStatus::Ok : FieldStatus::NonFinite;
    }

    /// Throwing wrapper; undefined points are errors, never NaN.
    Vec evaluate(std::span<const double> x) const {
        Vec out;
        switch (try_evaluate(x, out)) {
            case FieldStatus::Ok: return out;
            case FieldStatus::OutsideDomain:
                throw EvalError(EvalErrorKind::OutsideDomain,
                                "point outside field domain: " + point_str(x));
            case FieldStatus::Undefined:
                throw EvalError(EvalErrorKind::Undefined,
                                "field undefined at point: " + point_str(x));
            case FieldStatus::NonFinite:
                throw EvalError(EvalErrorKind::NonFinite,
                                "non-finite field value at point: " + point_str(x));
        }
        return out;
    }

    Vec evaluate(const Vec& x) const { return evaluate(std::span<const double>(x)); }

    /// Canonical field-file form; parse(serialize()) evaluates identically.
    std::string serialize() const {
        std::string out = "dim " + std::to_string(dim_) + ";";
        for (const FieldOverride& ov : overrides_) {
            out += " on " + ov.predicate.print() + " => " + vector_str(ov.components) + ";";
        }
        out += " f = " + vector_str(components_);
        return out;
    }

    static std::string point_str(std::span<const double> x) {
        std::string s = "(";
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) s += ", ";
            s += format_double(x[i]);
        }
        return s + ")";
    }

  private:
    static std::string vector_str(const std::vector<Expr>& comps) {
        std::string s = "(";
        for (std::size_t i = 0; i < comps.size(); ++i) {
            if (i) s += ", ";
            s += comps[i].print();
        }
        return s + ")";
    }

    int dim_ = 0;
    std::vector<Expr> components_;
    std::vector<FieldOverride> overrides_;
    DomainSpec domain_;
};

static_assert(FieldLike<VectorFieldDef>);

/// Field-definition file:
///   file     := "dim" INT ";" override* "f" "=" vector
///   override := "on" predicate "=>" vector ";"
inline VectorFieldDef parse_field(std::string_view text) {
    ParseOptions header_opts;  // dim not known yet
    detail::Parser p(text, header_opts);
    p.expect_ident("dim");
    const int dim = p.expect_int();
    if (dim < 1) p.fail("dim must be at least 1");
    p.expect_punct(";");

    ParseOptions opts;
    opts.dim = dim;

    // Re-lex with the dimension known; simplest is to reparse from scratch.
    detail::Parser body(text, opts);
    body.expect_ident("dim");
    body.expect_int();
    body.expect_punct(";");

    auto parse_vector = [&](std::vector<Expr>& comps) {
        body.expect_punct("(");
        for (;;) {
            Expr e;
            e.root = body.parse_expr(e);
            comps.push_back(std::move(e));
            if (!body.accept_punct(",")) break;
        }
        body.expect_punct(")");
        if (static_cast<int>(comps.size()) != dim)
            body.fail("expected " + std::to_string(dim) + " components, got " +
                      std::to_string(comps.size()));
    };

    std::vector<FieldOverride> overrides;
    while (body.accept_ident("on")) {
        FieldOverride ov;
        ov.predicate.root = body.parse_comparison(ov.predicate);
        body.expect_punct("=>");
        parse_vector(ov.components);
        body.expect_punct(";");
        overrides.push_back(std::move(ov));
    }
    body.expect_ident("f");
    body.expect_punct("=");
    std::vector<Expr> comps;
    parse_vector(comps);
    body.expect_end();
    return VectorFieldDef(dim, std::move(comps), std::move(overrides));
}

// ---------------------------------------------------------------------------
// Germ curves
// ---------------------------------------------------------------------------

/// A C1 curve phi(eps; x) with phi(0) = x and phi'(0) = f(x); expressions in
/// (eps, x1..xN). The base-point conditions are checked at use sites.
struct GermCurveDef {
    int dim = 0;
    std::vector<Expr> position;
    std::vector<Expr> velocity;
    double eps_max = 1.0;

    Vec eval_position(double eps, std::span<const double> x) const {
        EvalEnv env{x.data(), dim, eps};
        Vec out(dim);
        for (int i = 0; i < dim; ++i) out[i] = position[i].eval(env);
        return out;
    }

    Vec eval_velocity(double eps, std::span<const double> x) const {
        EvalEnv env{x.data(), dim, eps};
        Vec out(dim);
        for (int i = 0; i < dim; ++i) out[i] = velocity[i].eval(env);
        return out;
    }

    /// Central finite difference of the position expressions, step eps*1e-4.
    Vec fd_velocity(double eps, std::span<const double> x) const {
        const double step = std::max(eps, 1e-12) * 1e-4;
        Vec hi = eval_position(eps + step, x);
        Vec lo = eval_position(eps - step, x);
        Vec out(dim);
        for (int i = 0; i < dim; ++i) out[i] = (hi[i] - lo[i]) / (2.0 * step);
        return out;
    }
};

/// Germ-definition file:
///   germfile := "dim" INT ";" "pos" "=" vector ";" "vel" "=" vector ";"
///               "epsmax" "=" NUMBER
inline GermCurveDef parse_germ(std::string_view text) {
    ParseOptions probe_opts;
    detail::Parser header(text, probe_opts);
    header.expect_ident("dim");
    const int dim = header.expect_int();
    if (dim < 1) header.fail("dim must be at least 1");

    ParseOptions opts;
    opts.dim = dim;
    opts.scalar0 = "eps";
    detail::Parser p(text, opts);
    p.expect_ident("dim");
    p.expect_int();
    p.expect_punct(";");

    GermCurveDef germ;
    germ.dim = dim;
    auto parse_vector = [&](std::vector<Expr>& comps) {
        p.expect_punct("(");
        for (;;) {
            Expr e;
            e.root = p.parse_expr(e);
            comps.push_back(std::move(e));
            if (!p.accept_punct(",")) break;
        }
        p.expect_punct(")");
        if (static_cast<int>(comps.size()) != dim) p.fail("germ component count mismatch");
    };
    p.expect_ident("pos");
    p.expect_punct("=");
    parse_vector(germ.position);
    p.expect_punct(";");
    p.expect_ident("vel");
    p.expect_punct("=");
    parse_vector(germ.velocity);
    p.expect_punct(";");
    p.expect_ident("epsmax");
    p.expect_punct("=");
    bool neg = p.accept_punct("-");
    germ.eps_max = p.expect_number() * (neg ? -1.0 : 1.0);
    if (germ.eps_max <= 0) p.fail("epsmax must be positive");
    p.expect_end();
    return germ;
}

/// The straight-ray germ phi(eps; x) = x + eps*f(x) with velocity f(x), built
/// from the field's default components. Only valid at base points where no
/// override fires.
inline GermCurveDef germ_from_ray(const VectorFieldDef& field, double eps_max = 1.0) {
    GermCurveDef germ;
    germ.dim = field.dim();
    germ.eps_max = eps_max;
    for (int i = 0; i < field.dim(); ++i) {
        // position_i = x_i + eps * f_i(x)
        Expr pos = field.components()[i];
        const int f_root = pos.root;
        const int var = pos.add_node({Op::Var, 0.0, i});
        const int eps = pos.add_node({Op::Scalar0});
        const int mul = pos.add_node({Op::Mul, 0.0, eps, f_root});
        pos.root = pos.add_node({Op::Add, 0.0, var, mul});
        germ.position.push_back(std::move(pos));
        germ.velocity.push_back(field.components()[i]);
    }
    return germ;
}

// ---------------------------------------------------------------------------
// Growth sampling
// ---------------------------------------------------------------------------

struct GrowthReport {
    int n_samples = 0;
    int n_undefined = 0;
    double max_violation = 0.0;  // max of |f(z)| - (c1|z| + c0), clamped at 0
    Vec worst_point;
};

/// Samples points uniformly in the ball of the given radius and reports the
/// worst violation of the linear growth bound. Undefined points are skipped
/// and counted.
template <FieldLike F>
GrowthReport check_growth_sample(const F& field, const GrowthBound& bound, int n_samples,
                                 double radius, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
    bound.validate();
    GrowthReport report;
    report.n_samples = n_samples;
    Rng rng(seed);
    Vec fx;
    for (int k = 0; k < n_samples; ++k) {
        Vec z = rng.in_ball(field.dim(), radius);
        if (field.try_evaluate(z, fx) != FieldStatus::Ok) {
            ++report.n_undefined;
            continue;
        }
        const double fn = norm(fx);
        const double bound_val = bound.c1 * norm(z) + bound.c0;
        double violation = fn - bound_val;
        // A gap below evaluation roundoff cannot be certified as a violation.
        if (violation <= 1e-13 * (1.0 + fn + bound_val)) violation = 0.0;
        if (violation > report.max_violation) {
            report.max_violation = violation;
            report.worst_point = z;
        }
    }
    return report;
}

}  // namespace selfcont
