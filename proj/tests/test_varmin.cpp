#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "selfcont/varmin.hpp"
#include "selfcont/zoo.hpp"
#include "support/test_fields.hpp"

using namespace selfcont;

namespace {

OptConfig small_cfg(int n_nodes = 16, long budget = 200000, int restarts = 2,
                    std::uint64_t seed = 11) {
    OptConfig cfg;
    cfg.n_nodes = n_nodes;
    cfg.budget = budget;
    cfg.restarts = restarts;
    cfg.seed = seed;
    return cfg;
}

SnapSpec axis_snap() {
    ParseOptions opts;
    opts.dim = 2;
    return SnapSpec{parse_predicate("x1 == 0", opts), 1e-9};
}

}  // namespace

TEST_CASE("zero field: the constant path is found immediately") {
    const VectorFieldDef f = parse_field("dim 2; f = (0, 0)");
    const OptResult r = minimize_fixed_start(f, {0.0, 0.0}, 1.0, small_cfg());
    CHECK(r.e_value <= 1e-10);
    for (int k = 0; k < r.path.n_nodes(); ++k)
        CHECK(norm(r.path.point_vec(k)) <= 1e-9);
}

TEST_CASE("capture field: germ-snap seeding reaches the sliding minimizer") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    OptConfig cfg = small_cfg(16);
    cfg.init = InitSpec::germ_snap(0.1, axis_snap());
    const OptResult r = minimize_fixed_start(e.field, {0.5, 0.0}, 1.5, cfg);
    CHECK(r.e_value <= 1e-4);
    const Path ref = discretize_reference(e.references[0], 64);
    CHECK(sup_distance(r.path, ref) <= 0.02);
}

TEST_CASE("rotation field from the origin keeps a positive floor") {
    const ZooEntry e = zoo_instantiate("rot-unit");
    OptConfig cfg = small_cfg(64, 400000, 2, 7);
    const OptResult r = minimize_fixed_start(e.field, {0.0, 0.0}, 1.0, cfg);
    INFO("e_value = " << r.e_value);
    CHECK(r.e_value >= 0.05);
}

TEST_CASE("two-point on the zero field recovers |z - x0|") {
    const VectorFieldDef f = parse_field("dim 2; f = (0, 0)");
    const OptResult r = minimize_two_point(f, {0.0, 0.0}, {1.0, 0.0}, 1.0, small_cfg());
    CHECK(r.e_value == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("two-point on a constant field is exact when the endpoint is reachable") {
    const VectorFieldDef f = parse_field("dim 2; f = (0.6, -0.2)");
    const Vec x0{0.1, 0.2};
    const Vec z{0.1 + 0.6, 0.2 - 0.2};
    const OptResult r = minimize_two_point(f, x0, z, 1.0, small_cfg());
    CHECK(r.e_value <= 1e-10);
}

TEST_CASE("e_value equals an independent recomputation") {
    const ZooEntry e = zoo_instantiate("intro-pair");
    OptConfig cfg = small_cfg(8, 50000, 2);
    const OptResult r = minimize_fixed_start(e.field, {1.0, 0.0}, 1.0, cfg);
    const double recomputed = error_functional(e.field, r.path, cfg.quad).value;
    CHECK(std::fabs(r.e_value - recomputed) <= 1e-12);
}

TEST_CASE("trace is non-increasing and restarts are summarized") {
    const ZooEntry e = zoo_instantiate("rot-unit");
    OptConfig cfg = small_cfg(16, 100000, 3);
    const OptResult r = minimize_fixed_start(e.field, {1.0, 0.0}, 0.5, cfg);
    REQUIRE(!r.trace.empty());
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        CHECK(r.trace[i].second <= r.trace[i - 1].second);
        CHECK(r.trace[i].first >= r.trace[i - 1].first);
    }
    CHECK(r.restarts_summary.size() == 3);
    double best = r.restarts_summary[0];
    for (double v : r.restarts_summary) best = std::min(best, v);
    CHECK(r.e_value == best);
}

TEST_CASE("identical configuration gives bitwise identical results") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    OptConfig cfg = small_cfg(16, 80000, 3, 12345);
    cfg.init = InitSpec::germ_plain(0.2);
    const OptResult a = minimize_fixed_start(e.field, {0.3, 0.0}, 1.0, cfg);
    const OptResult b = minimize_fixed_start(e.field, {0.3, 0.0}, 1.0, cfg);
    CHECK(a.e_value == b.e_value);
    CHECK(a.path.coords() == b.path.coords());
    CHECK(a.to_json("p.csv").dump() == b.to_json("p.csv").dump());

    OptConfig threaded = cfg;
    threaded.workers = 3;
    const OptResult c = minimize_fixed_start(e.field, {0.3, 0.0}, 1.0, threaded);
    CHECK(c.e_value == a.e_value);
    CHECK(c.path.coords() == a.path.coords());
}

TEST_CASE("different seeds may differ but both stay valid") {
    const ZooEntry e = zoo_instantiate("rot-unit");
    OptConfig cfg1 = small_cfg(16, 60000, 2, 1);
    OptConfig cfg2 = small_cfg(16, 60000, 2, 2);
    const OptResult a = minimize_fixed_start(e.field, {1.0, 0.0}, 0.5, cfg1);
    const OptResult b = minimize_fixed_start(e.field, {1.0, 0.0}, 0.5, cfg2);
    const double ra = error_functional(e.field, a.path).value;
    const double rb = error_functional(e.field, b.path).value;
    CHECK(std::fabs(a.e_value - ra) <= 1e-12);
    CHECK(std::fabs(b.e_value - rb) <= 1e-12);
}

TEST_CASE("node refinement keeps the old path feasible") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    OptConfig cfg = small_cfg(16);
    cfg.init = InitSpec::germ_snap(0.1, axis_snap());
    const OptResult r = minimize_fixed_start(e.field, {0.5, 0.0}, 1.5, cfg);
    Path refined = r.path;
    const int original_segments = refined.n_segments();
    for (int i = 0; i < original_segments; ++i) {
        const double t = 0.5 * (r.path.time(i) + r.path.time(i + 1));
        refined = insert_node(refined, t);
    }
    const double e_old = error_functional(e.field, r.path).value;
    const double e_new = error_functional(e.field, refined).value;
    CHECK(e_new <= e_old + 1e-10);
}

TEST_CASE("value function vanishes where references exist") {
    const ZooEntry radial = zoo_instantiate("radial-unit");
    OptConfig cfg = small_cfg(16, 100000, 1);
    cfg.init = InitSpec::germ_plain(0.05);
    const auto m = value_function(radial.field, {0.0, 0.0}, {0.25, 0.5, 1.0}, cfg);
    REQUIRE(m.size() == 3);
    for (const auto& [r, est] : m) {
        INFO("r = " << r);
        CHECK(est <= 1e-8);
    }
}

TEST_CASE("value function at tiny horizons is tiny") {
    const ZooEntry e = zoo_instantiate("intro-pair");
    OptConfig cfg = small_cfg(4, 20000, 1);
    cfg.init = InitSpec::germ_plain(1e-6);
    const auto m = value_function(e.field, {1.0, 0.0}, {1e-6}, cfg);
    CHECK(m[0].second <= 1e-6 * std::sqrt(2.0));
}

TEST_CASE("value function on the capture field with aligned grid") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    OptConfig cfg = small_cfg(17, 400000, 1);  // kink 0.5 sits on every grid used
    cfg.init = InitSpec::germ_snap(0.05, axis_snap());
    const auto m = value_function(e.field, {0.5, 0.0}, {0.25, 0.5, 1.0}, cfg);
    for (const auto& [r, est] : m) {
        INFO("r = " << r << " m = " << est);
        CHECK(est <= 1e-4);
    }
}

TEST_CASE("produced paths satisfy the a priori bound") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    OptConfig cfg = small_cfg(16, 60000, 2);
    cfg.init = InitSpec::germ_snap(0.1, axis_snap());
    const OptResult r = minimize_fixed_start(e.field, {0.5, 0.0}, 1.5, cfg);
    const AprioriCheck c = apriori_bound_check(r.path, e.growth, r.e_value);
    CHECK(c.holds);
}

TEST_CASE("verifier accepts the swapped-field family") {
    const ZooEntry e = zoo_instantiate("cross-axis-swapped");
    const Path x = Path::from_nodes(2, {{0.0, {0.0, 0.0}}, {1.0, {1.0, 0.0}}});
    auto family = [](int j) {
        return Path::from_nodes(2, {{0.0, {0.0, 1.0 / j}}, {1.0, {1.0, 1.0 / j}}});
    };
    const VerifyReport rep = verify_generalized(e.field, x, family, {2, 8, 32, 128});
    CHECK(rep.accepted);
    for (const auto& row : rep.per_j) CHECK(row.e == 0.0);
    CHECK(rep.per_j.back().sup_dist == Catch::Approx(1.0 / 128).margin(1e-15));
    CHECK(rep.note.find("sup-norm") != std::string::npos);
}

TEST_CASE("verifier accepts a constant family equal to an exact solution") {
    const VectorFieldDef f = parse_field("dim 2; f = (0.5, 1)");
    const Path x = Path::from_nodes(2, {{0.0, {0.0, 0.0}}, {1.0, {0.5, 1.0}}});
    const VerifyReport rep =
        verify_generalized(f, x, [&](int) { return x; }, {1, 2, 3});
    CHECK(rep.accepted);
}

TEST_CASE("verifier accepts an a.e. solution as its own family") {
    const ZooEntry e = zoo_instantiate("converge-axis");
    const Path x = discretize_reference(e.references[0], 128);
    const VerifyReport rep = verify_generalized(e.field, x, [&](int) { return x; }, {1, 2});
    CHECK(rep.accepted);
    for (const auto& row : rep.per_j) CHECK(row.e <= 1e-12);
}

TEST_CASE("verifier rejects families that do not converge or do not solve") {
    const ZooEntry e = zoo_instantiate("cross-axis");
    const Path x = Path::from_nodes(2, {{0.0, {0.0, 0.0}}, {1.0, {1.0, 0.0}}});
    auto family = [](int j) {
        return Path::from_nodes(2, {{0.0, {0.0, 1.0 / j}}, {1.0, {1.0, 1.0 / j}}});
    };
    // under the printed field the family has E = sqrt(2) for every j
    const VerifyReport rep = verify_generalized(e.field, x, family, {2, 8, 32});
    CHECK_FALSE(rep.accepted);
    CHECK(rep.failing_clause.find("tol_e") != std::string::npos);

    auto far_family = [](int) {
        return Path::from_nodes(2, {{0.0, {0.0, 5.0}}, {1.0, {1.0, 5.0}}});
    };
    const ZooEntry swapped = zoo_instantiate("cross-axis-swapped");
    const VerifyReport rep2 = verify_generalized(swapped.field, x, far_family, {2});
    CHECK_FALSE(rep2.accepted);
    CHECK(rep2.failing_clause.find("sup") != std::string::npos);

    auto mismatched = [](int) {
        return Path::from_nodes(2, {{0.0, {0.0, 0.0}}, {2.0, {2.0, 0.0}}});
    };
    CHECK_THROWS_AS(verify_generalized(swapped.field, x, mismatched, {2}),
                    std::invalid_argument);
}

TEST_CASE("initialization that leaves the domain is an error") {
    VectorFieldDef f = parse_field("dim 2; f = (1, 0)");
    f.domain().kind = DomainSpec::Kind::Ball;
    f.domain().center = {0.0, 0.0};
    f.domain().radius = 0.5;
    OptConfig cfg = small_cfg(8, 10000, 1);
    CHECK_THROWS_AS(minimize_fixed_start(f, {0.4, 0.0}, 5.0, cfg), EvalError);
}
