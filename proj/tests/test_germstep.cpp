#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "selfcont/germstep.hpp"
#include "selfcont/zoo.hpp"
#include "support/test_fields.hpp"

using namespace selfcont;

namespace {

StepConfig plain(double h, double t_end) {
    StepConfig cfg;
    cfg.h = h;
    cfg.t_end = t_end;
    return cfg;
}

StepConfig snap(double h, double t_end, const std::string& pred, double tol = 1e-9) {
    StepConfig cfg;
    cfg.h = h;
    cfg.t_end = t_end;
    cfg.mode = StepConfig::Mode::Snap;
    ParseOptions opts;
    opts.dim = 2;
    cfg.snap = SnapSpec{parse_predicate(pred, opts), tol};
    return cfg;
}

double slope_fit(const std::vector<double>& hs, const std::vector<double>& es) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(hs.size());
    for (int i = 0; i < n; ++i) {
        const double x = std::log(hs[i]);
        const double y = std::log(es[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("plain stepping on the radial unit field is exact along the ray") {
    const ZooEntry e = zoo_instantiate("radial-unit");
    const StepReport r = integrate(e.field, {0.0, 0.0}, plain(0.25, 1.0));
    REQUIRE(r.path.n_nodes() == 5);
    for (int k = 0; k <= 4; ++k) {
        CHECK(r.path.time(k) == 0.25 * k);
        CHECK(r.path.point(k)[0] == 0.25 * k);
        CHECK(r.path.point(k)[1] == 0.0);
    }
    CHECK(r.e_total <= 1e-12);
    CHECK_FALSE(r.truncated);
}

TEST_CASE("plain stepping on the zero field holds still") {
    const VectorFieldDef f = parse_field("dim 2; f = (0, 0)");
    const StepReport r = integrate(f, {3.0, -1.0}, plain(0.1, 1.0));
    CHECK(r.e_total == 0.0);
    for (int k = 0; k < r.path.n_nodes(); ++k)
        CHECK(r.path.point_vec(k) == Vec{3.0, -1.0});
}

TEST_CASE("plain stepping chatters on the capture field; E does not vanish with h") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    for (double h : {0.1, 0.05, 0.025}) {
        const StepReport r = integrate(e.field, {0.5, 0.0}, plain(h, 1.5));
        INFO("h = " << h << "  E = " << r.e_total);
        CHECK(r.e_total >= 0.1);
    }
}

TEST_CASE("snap mode reaches the axis and slides") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    const StepReport r = integrate(e.field, {0.5, 0.0}, snap(0.1, 1.5, "x1 == 0"));
    INFO(r.truncation_reason);
    CHECK_FALSE(r.truncated);
    CHECK(r.e_total <= 1e-6);
    const Vec end = r.path.point_vec(r.path.n_nodes() - 1);
    CHECK(end[0] == 0.0);  // exactly on the manifold
    CHECK(end[1] == Catch::Approx(1.5).margin(1e-9));
    // compare against the closed-form sliding solution
    const Path ref = discretize_reference(e.references[0], 64);
    double worst = 0.0;
    for (int k = 0; k < ref.n_nodes(); ++k)
        worst = std::max(worst, dist(ref.eval_at(ref.time(k)),
                                     r.path.eval_at(std::min(ref.time(k), r.path.t_end()))));
    CHECK(worst <= 1e-9);
}

TEST_CASE("snap from a start that crosses mid-step") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    // crossing happens inside step 5 rather than at a node
    const StepReport r = integrate(e.field, {0.47, 0.0}, snap(0.1, 1.2, "x1 == 0"));
    CHECK_FALSE(r.truncated);
    CHECK(r.e_total <= 1e-6);
    const Vec end = r.path.point_vec(r.path.n_nodes() - 1);
    CHECK(end[0] == 0.0);
}

TEST_CASE("snap never moves a node farther than the step segment") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    const double h = 0.1;
    const StepReport plain_run = integrate(e.field, {0.47, 0.0}, plain(h, 1.2));
    const StepReport snap_run = integrate(e.field, {0.47, 0.0}, snap(h, 1.2, "x1 == 0"));
    (void)plain_run;
    const double max_step_len = h * std::sqrt(2.0) + 1e-12;
    for (int k = 1; k < snap_run.path.n_nodes(); ++k)
        CHECK(dist(snap_run.path.point_vec(k), snap_run.path.point_vec(k - 1)) <=
              max_step_len);
}

TEST_CASE("germ mode follows the supplied curve in chords") {
    const ZooEntry e = zoo_instantiate("rot-unit");
    const GermCurveDef germ = parse_germ(
        "dim 2; pos = (x1 * cos(eps) + x2 * sin(eps), -x1 * sin(eps) + x2 * cos(eps)); "
        "vel = (-x1 * sin(eps) + x2 * cos(eps), -x1 * cos(eps) - x2 * sin(eps)); "
        "epsmax = 1");
    StepConfig cfg = plain(0.1, 1.0);
    cfg.mode = StepConfig::Mode::Germ;
    cfg.germ = germ;
    const StepReport r = integrate(e.field, {1.0, 0.0}, cfg);
    CHECK(r.path.n_nodes() == 81);  // 8 chords per step
    CHECK(r.e_total <= 0.01);
    const Vec end = r.path.point_vec(r.path.n_nodes() - 1);
    CHECK(dist(end, Vec{std::cos(1.0), -std::sin(1.0)}) <= 1e-6);
    const StepConfig bad = [] {
        StepConfig c;
        c.h = 2.0;
        c.t_end = 4.0;
        c.mode = StepConfig::Mode::Germ;
        c.germ = parse_germ("dim 1; pos = (x1 + eps); vel = (1); epsmax = 1");
        return c;
    }();
    const VectorFieldDef line = parse_field("dim 1; f = (1)");
    CHECK_THROWS_AS(integrate(line, {0.0}, bad), std::invalid_argument);
}

TEST_CASE("leaving the domain truncates with a flag") {
    VectorFieldDef f = parse_field("dim 2; f = (1, 0)");
    f.domain().kind = DomainSpec::Kind::Ball;
    f.domain().center = {0.0, 0.0};
    f.domain().radius = 1.0;
    const StepReport r = integrate(f, {0.0, 0.0}, plain(0.3, 5.0));
    CHECK(r.truncated);
    CHECK(r.path.t_end() < 5.0);
    CHECK(!r.truncation_reason.empty());
}

TEST_CASE("non-finite field values are an error") {
    // x0 = 0, h = 1: the first step lands exactly on the pole at x1 = 1
    const VectorFieldDef f = parse_field("dim 1; f = (1 / (1 - x1))");
    CHECK_THROWS_AS(integrate(f, {0.0}, [] {
                        StepConfig c;
                        c.h = 1.0;
                        c.t_end = 3.0;
                        return c;
                    }()),
                    EvalError);
}

TEST_CASE("integration is deterministic") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    const StepReport a = integrate(e.field, {0.47, 0.0}, snap(0.1, 1.2, "x1 == 0"));
    const StepReport b = integrate(e.field, {0.47, 0.0}, snap(0.1, 1.2, "x1 == 0"));
    CHECK(a.path.times() == b.path.times());
    CHECK(a.path.coords() == b.path.coords());
    CHECK(a.e_total == b.e_total);
}

TEST_CASE("first-order convergence on smooth restrictions") {
    const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
    struct Case {
        ZooEntry entry;
        Vec x0;
    };
    const Case cases[] = {
        {zoo_instantiate("rot-unit"), {1.0, 0.0}},
        {zoo_instantiate("spiral-sin"), {2.0, 0.0}},
    };
    for (const Case& c : cases) {
        std::vector<double> es, dists;
        const Path ref = testing::rk4_reference(c.entry.field, c.x0, 1.0, 1e-4);
        for (double h : hs) {
            const StepReport r = integrate(c.entry.field, c.x0, plain(h, 1.0));
            REQUIRE_FALSE(r.truncated);
            es.push_back(r.e_total);
            double worst = 0.0;
            for (int k = 0; k < r.path.n_nodes(); ++k)
                worst = std::max(worst, dist(r.path.point_vec(k),
                                             ref.eval_at(std::min(r.path.time(k), 1.0))));
            dists.push_back(worst);
        }
        INFO(c.entry.name << " E: " << es[0] << " " << es[1] << " " << es[2] << " " << es[3]);
        CHECK(slope_fit(hs, es) >= 0.8);
        CHECK(slope_fit(hs, dists) >= 0.8);
    }
}

TEST_CASE("step report serializes") {
    const VectorFieldDef f = parse_field("dim 2; f = (0, 0)");
    const StepReport r = integrate(f, {1.0, 1.0}, plain(0.5, 1.0));
    const auto j = r.to_json(0.5, "plain");
    CHECK(j["E_total"] == 0.0);
    CHECK(j["steps"] == 2);
    CHECK(j["truncated"] == false);
}
