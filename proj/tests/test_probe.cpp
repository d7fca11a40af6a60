#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "selfcont/probe.hpp"
#include "support/test_fields.hpp"

using namespace selfcont;

namespace {
const char* kRadialUnit =
    "dim 2; on norm(x1, x2) == 0 => (1, 0); f = (x1 / norm(x1, x2), x2 / norm(x1, x2))";
const char* kRotUnit =
    "dim 2; on norm(x1, x2) == 0 => (1, 0); f = (x2 / norm(x1, x2), -x1 / norm(x1, x2))";
}  // namespace

TEST_CASE("verdict rule is a pure function of the residuals") {
    ProbeSchedule sched;
    auto make = [](std::initializer_list<double> ds) {
        std::vector<std::pair<double, double>> out;
        double eps = 1e-2;
        for (double d : ds) {
            out.emplace_back(eps, d);
            eps *= 0.5;
        }
        return out;
    };
    // 24 residuals, all zero -> self-continuous
    std::vector<std::pair<double, double>> zeros = make({0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                                                         0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    CHECK(decide_verdict(zeros, sched) == Verdict::SelfContinuous);

    // constant large residuals -> not self-continuous (flat stall)
    std::vector<std::pair<double, double>> flat(24, {1e-2, 1.0});
    for (int i = 0; i < 24; ++i) flat[i].first = 1e-2 * std::pow(0.5, i);
    CHECK(decide_verdict(flat, sched) == Verdict::NotSelfContinuous);

    // growing residuals -> not self-continuous (non-decreasing tail)
    std::vector<std::pair<double, double>> growing;
    for (int i = 0; i < 24; ++i)
        growing.emplace_back(1e-2 * std::pow(0.5, i), 0.01 * std::pow(2.0, i));
    CHECK(decide_verdict(growing, sched) == Verdict::NotSelfContinuous);

    // decaying but not to tol, not stalled -> inconclusive
    std::vector<std::pair<double, double>> slow;
    for (int i = 0; i < 24; ++i)
        slow.emplace_back(1e-2 * std::pow(0.5, i), 0.5 * std::pow(0.8, i));
    CHECK(decide_verdict(slow, sched) == Verdict::Inconclusive);

    CHECK(decide_verdict(zeros, sched) == decide_verdict(zeros, sched));
}

TEST_CASE("ray probe: radial unit field at the origin, residuals exactly zero") {
    const VectorFieldDef f = parse_field(kRadialUnit);
    const ProbeReport r = probe_ray(f, {0.0, 0.0});
    CHECK(r.verdict == Verdict::SelfContinuous);
    CHECK(r.residuals.size() == 24);
    for (const auto& [eps, d] : r.residuals) CHECK(d == 0.0);
    REQUIRE(r.limit_estimate.has_value());
    CHECK(*r.limit_estimate == Vec{1.0, 0.0});
}

TEST_CASE("ray probe: rotational unit field at the origin, residuals sqrt(2)") {
    const VectorFieldDef f = parse_field(kRotUnit);
    const ProbeReport r = probe_ray(f, {0.0, 0.0});
    CHECK(r.verdict == Verdict::NotSelfContinuous);
    for (const auto& [eps, d] : r.residuals)
        CHECK(std::fabs(d - std::sqrt(2.0)) <= 1e-12);
    // the tail limit exists and is the tangential value, not f(0)
    REQUIRE(r.limit_estimate.has_value());
    CHECK(dist(*r.limit_estimate, Vec{0.0, -1.0}) <= 1e-12);
}

TEST_CASE("ray probe: zero field is trivially self-continuous") {
    const VectorFieldDef f = parse_field("dim 2; f = (0, 0)");
    const ProbeReport r = probe_ray(f, {3.0, -4.0});
    CHECK(r.verdict == Verdict::TriviallySelfContinuous);
    CHECK(r.residuals.empty());
}

TEST_CASE("ray probe: smooth rotation field is self-continuous") {
    const VectorFieldDef f = parse_field("dim 2; f = (x2, -x1)");
    CHECK(probe_ray(f, {1.0, 0.0}).verdict == Verdict::SelfContinuous);
}

TEST_CASE("trivial probe never samples away from the point") {
    int calls = 0;
    testing::FnField f{2, [&calls](std::span<const double> x) -> std::optional<Vec> {
                           ++calls;
                           (void)x;
                           return Vec{0.0, 0.0};
                       }};
    probe_ray(f, {1.0, 2.0});
    CHECK(calls == 1);
}

TEST_CASE("domain exits shrink eps0; fully inadmissible is inconclusive") {
    VectorFieldDef f = parse_field("dim 2; f = (1, 0)");
    f.domain().kind = DomainSpec::Kind::Ball;
    f.domain().center = {0.0, 0.0};
    f.domain().radius = 1.0;
    const ProbeReport near = probe_ray(f, {0.99995, 0.0});
    CHECK(near.verdict == Verdict::SelfContinuous);
    CHECK(near.residuals.front().first < 1e-2);
    CHECK(near.diagnostics.find("shrunk") != std::string::npos);

    const ProbeReport stuck = probe_ray(f, {1.0, 0.0});
    CHECK(stuck.verdict == Verdict::Inconclusive);
    CHECK(stuck.residuals.empty());
}

TEST_CASE("germ probe: vertical germ on the converge-axis field") {
    const VectorFieldDef f =
        parse_field("dim 2; on x1 == 0 => (0, 1); f = (-sign(x1), 1)");
    const GermCurveDef germ =
        parse_germ("dim 2; pos = (0, x2 + eps); vel = (0, 1); epsmax = 1");
    const ProbeReport r = probe_germ(f, germ, {0.0, 0.0});
    CHECK(r.verdict == Verdict::SelfContinuous);
    for (const auto& [eps, d] : r.residuals) CHECK(d == 0.0);
}

TEST_CASE("germ probe: straight-ray germ reproduces the ray probe bitwise") {
    const char* defs[] = {
        "dim 2; f = (x2, -x1)",
        "dim 2; f = (-1, sign(x1))",
        "dim 2; f = (sin(1 / norm(x1, x2)), cos(1 / norm(x1, x2)))",
    };
    Rng rng(4242);
    for (const char* def : defs) {
        const VectorFieldDef f = parse_field(def);
        const GermCurveDef germ = germ_from_ray(f);
        for (int k = 0; k < 4; ++k) {
            Vec x = rng.in_ball(2, 3.0);
            if (norm(x) < 0.1) x[0] += 1.0;
            const ProbeReport ray = probe_ray(f, x);
            const ProbeReport ger = probe_germ(f, germ, x);
            REQUIRE(ray.residuals.size() == ger.residuals.size());
            for (std::size_t i = 0; i < ray.residuals.size(); ++i) {
                CHECK(ray.residuals[i].first == ger.residuals[i].first);
                CHECK(ray.residuals[i].second == ger.residuals[i].second);
            }
            CHECK(ray.verdict == ger.verdict);
        }
    }
}

TEST_CASE("germ probe: tangent-circle germ on the annulus rotation field") {
    const VectorFieldDef f = parse_field(
        "dim 2; on norm(x1, x2) == 0 => (0, 0); on abs(norm(x1, x2) - 1) <= 1e-12 => "
        "(x2, -x1); f = (x2 / (norm(x1, x2) * (norm(x1, x2) - 1)), -x1 / (norm(x1, x2) * "
        "(norm(x1, x2) - 1)))");
    const GermCurveDef germ = parse_germ(
        "dim 2; pos = (x1 * cos(eps) + x2 * sin(eps), -x1 * sin(eps) + x2 * cos(eps)); "
        "vel = (-x1 * sin(eps) + x2 * cos(eps), -x1 * cos(eps) - x2 * sin(eps)); "
        "epsmax = 1");
    const ProbeReport r = probe_germ(f, germ, {1.0, 0.0});
    CHECK(r.verdict == Verdict::SelfContinuous);
    for (const auto& [eps, d] : r.residuals) CHECK(d == 0.0);
}

TEST_CASE("germ probe rejects curves that miss the base point or velocity") {
    const VectorFieldDef f = parse_field("dim 2; f = (1, 0)");
    const GermCurveDef off_pos =
        parse_germ("dim 2; pos = (x1 + 0.001, x2); vel = (1, 0); epsmax = 1");
    CHECK_THROWS_AS(probe_germ(f, off_pos, {0.0, 0.0}), std::invalid_argument);
    const GermCurveDef off_vel =
        parse_germ("dim 2; pos = (x1 + eps, x2); vel = (1, 0.5); epsmax = 1");
    CHECK_THROWS_AS(probe_germ(f, off_vel, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("germ probe: finite-difference velocity fallback") {
    const VectorFieldDef f = parse_field("dim 2; f = (x2, -x1)");
    const GermCurveDef germ = parse_germ(
        "dim 2; pos = (x1 * cos(eps) + x2 * sin(eps), -x1 * sin(eps) + x2 * cos(eps)); "
        "vel = (-x1 * sin(eps) + x2 * cos(eps), -x1 * cos(eps) - x2 * sin(eps)); "
        "epsmax = 1");
    const ProbeReport fd = probe_germ(f, germ, {1.0, 0.0}, {}, /*fd_velocity=*/true);
    CHECK(fd.verdict == Verdict::SelfContinuous);
}

TEST_CASE("extension search: radial unit with the origin value removed") {
    VectorFieldDef f = parse_field("dim 2; f = (x1 / norm(x1, x2), x2 / norm(x1, x2))");
    ParseOptions opts;
    opts.dim = 2;
    f.domain().excluded = parse_predicate("norm(x1, x2) == 0", opts);
    const ExtensionSearch r = fit_germ_direction(f, {0.0, 0.0}, 64, 0.05, 20.0, 24);
    REQUIRE(r.found.has_value());
    CHECK_FALSE(r.found->equilibrium);
    CHECK(r.found->speed == 1.0);
    CHECK(r.found->direction == Vec{1.0, 0.0});  // lexicographically first grid direction
    CHECK(r.found->tail_residual == 0.0);
}

TEST_CASE("extension search: rotation field needs the equilibrium escape hatch") {
    VectorFieldDef f = parse_field("dim 2; f = (x2 / norm(x1, x2), -x1 / norm(x1, x2))");
    ParseOptions opts;
    opts.dim = 2;
    f.domain().excluded = parse_predicate("norm(x1, x2) == 0", opts);
    const ExtensionSearch no = fit_germ_direction(f, {0.0, 0.0}, 64, 0.05, 20.0, 24);
    CHECK_FALSE(no.found.has_value());
    CHECK(no.best_residual > 1e-5);

    const ExtensionSearch eq = fit_germ_direction(f, {0.0, 0.0}, 64, 0.05, 20.0, 24, {},
                                                  /*allow_equilibrium=*/true);
    REQUIRE(eq.found.has_value());
    CHECK(eq.found->equilibrium);
    CHECK(eq.found->speed == 0.0);
}

TEST_CASE("extension search: no admissible extension on the capture field") {
    VectorFieldDef f = parse_field("dim 2; f = (-sign(x1), 1)");
    ParseOptions opts;
    opts.dim = 2;
    f.domain().excluded = parse_predicate("x1 == 0", opts);
    const ExtensionSearch r = fit_germ_direction(f, {0.0, 0.0}, 64, 0.05, 20.0, 24);
    CHECK_FALSE(r.found.has_value());
}

TEST_CASE("extension search is deterministic") {
    VectorFieldDef f = parse_field("dim 2; f = (x1 / norm(x1, x2), x2 / norm(x1, x2))");
    ParseOptions opts;
    opts.dim = 2;
    f.domain().excluded = parse_predicate("norm(x1, x2) == 0", opts);
    const ExtensionSearch a = fit_germ_direction(f, {0.0, 0.0}, 64, 0.05, 20.0, 24);
    const ExtensionSearch b = fit_germ_direction(f, {0.0, 0.0}, 64, 0.05, 20.0, 24);
    REQUIRE(a.found.has_value());
    REQUIRE(b.found.has_value());
    CHECK(a.found->direction == b.found->direction);
    CHECK(a.found->speed == b.found->speed);
}

TEST_CASE("extension search on a 3-D field") {
    VectorFieldDef f = parse_field(
        "dim 3; f = (x1 / norm(x1, x2, x3), x2 / norm(x1, x2, x3), x3 / norm(x1, x2, x3))");
    ParseOptions opts;
    opts.dim = 3;
    f.domain().excluded = parse_predicate("norm(x1, x2, x3) == 0", opts);
    const ExtensionSearch r = fit_germ_direction(f, {0.0, 0.0, 0.0}, 128, 0.05, 20.0, 24);
    REQUIRE(r.found.has_value());
    CHECK(r.found->speed == 1.0);
    CHECK(r.found->tail_residual <= 1e-7);
}

TEST_CASE("grid probe: rotation field flags exactly the origin") {
    const VectorFieldDef f = parse_field(kRotUnit);
    const auto grid = probe_grid(f, {-1, -1}, {1, 1}, {5, 5});
    REQUIRE(grid.size() == 25);
    int not_sc = 0;
    for (const auto& g : grid) {
        REQUIRE(g.verdict.has_value());
        if (*g.verdict == Verdict::NotSelfContinuous) {
            ++not_sc;
            CHECK(g.point == Vec{0.0, 0.0});
        }
    }
    CHECK(not_sc == 1);
}

TEST_CASE("grid probe: continuous linear field is self-continuous everywhere") {
    const VectorFieldDef f = parse_field("dim 2; f = (x2, -x1)");
    for (const auto& g : probe_grid(f, {-1, -1}, {1, 1}, {4, 4})) {
        REQUIRE(g.verdict.has_value());
        const bool good = *g.verdict == Verdict::SelfContinuous ||
                          *g.verdict == Verdict::TriviallySelfContinuous;
        CHECK(good);
    }
}

TEST_CASE("grid probe: capture field including axis nodes") {
    const VectorFieldDef f =
        parse_field("dim 2; on x1 == 0 => (0, 1); f = (-sign(x1), 1)");
    for (const auto& g : probe_grid(f, {-1, -1}, {1, 1}, {5, 5})) {
        REQUIRE(g.verdict.has_value());
        CHECK(*g.verdict == Verdict::SelfContinuous);
    }
}

TEST_CASE("grid probe reports undefined nodes") {
    VectorFieldDef f = parse_field("dim 2; f = (1, 0)");
    ParseOptions opts;
    opts.dim = 2;
    f.domain().excluded = parse_predicate("x1 == 0", opts);
    const auto grid = probe_grid(f, {-1, -1}, {1, 1}, {3, 3});
    int undefined = 0;
    for (const auto& g : grid)
        if (!g.verdict) ++undefined;
    CHECK(undefined == 3);  // the x1 == 0 column
}

TEST_CASE("probe report serializes to json") {
    const VectorFieldDef f = parse_field(kRotUnit);
    const auto j = probe_ray(f, {0.0, 0.0}).to_json();
    CHECK(j["verdict"] == "NotSelfContinuous");
    CHECK(j["residuals"].size() == 24);
    CHECK(j["point"] == nlohmann::ordered_json::array({0.0, 0.0}));
}
