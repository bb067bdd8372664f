#include <doctest.h>

#include <cstdio>
#include <sstream>

#include "cmcforge/runio.hpp"

using namespace cmcforge;

namespace {
RunRecord make_record() {
    RunRecord r;
    r.params.genus = 2;
    r.params.z0 = unit_phase(-kPi / 4.0);
    r.params.z1 = unit_phase(kPi / 4.0);
    r.params.rectangular = true;
    r.params.even_lambda = true;
    r.series = AccessorySeries::zero(2);
    r.series.a = {cplx(0.25), cplx(0.0), cplx(-0.125)};
    r.series.c = {cplx(1.0), cplx(0.0), cplx(0.5)};
    r.config.K = 16;
    r.config.seed = 7;
    r.final_F = 3.5e-7;
    r.eval_count = 1234;
    r.converged = true;
    r.F_dense = 4.1e-7;
    r.F_six = 6.0e-7;
    r.zeros.zeros_B.push_back({cplx(0.3, 0.2), 1, false});
    r.zeros.zeros_A_plus_1.push_back({cplx(-0.1, 0.0), 2, true});
    r.stability.unstable_count = 1;
    r.stability.lambda0.push_back(cplx(0.3, 0.2));
    r.family = FamilyKind::II;
    r.lambda0 = cplx(0.3, 0.2);
    r.driver_value = 0.77;
    r.created = "2024-05-01T00:00:00Z";
    r.message = "test";
    return r;
}
} // namespace

TEST_CASE("record json round trip") {
    RunRecord r = make_record();
    RunRecord back = run_record_from_json(to_json(r));
    CHECK(back.params.genus == r.params.genus);
    CHECK(std::abs(back.params.z0 - r.params.z0) == 0.0);
    CHECK(back.series.N == 2);
    CHECK(std::abs(back.series.a[2] - r.series.a[2]) == 0.0);
    CHECK(back.config.K == 16);
    CHECK(back.config.seed == 7);
    CHECK(back.final_F == r.final_F);
    CHECK(back.eval_count == r.eval_count);
    CHECK(back.converged);
    CHECK(back.F_dense == r.F_dense);
    REQUIRE(back.family.has_value());
    CHECK(*back.family == FamilyKind::II);
    REQUIRE(back.lambda0.has_value());
    CHECK(std::abs(*back.lambda0 - *r.lambda0) == 0.0);
    CHECK(back.driver_value == r.driver_value);
    REQUIRE(back.zeros.zeros_B.size() == 1);
    CHECK(back.zeros.zeros_B[0].multiplicity == 1);
    REQUIRE(back.zeros.zeros_A_plus_1.size() == 1);
    CHECK(back.zeros.zeros_A_plus_1[0].low_confidence);
    CHECK(back.stability.unstable_count == 1);
    CHECK(back.created == r.created);
    CHECK(back.message == "test");
}

TEST_CASE("nan diagnostics survive the round trip") {
    RunRecord r = make_record();
    r.F_dense = std::numeric_limits<double>::quiet_NaN();
    r.F_six = std::numeric_limits<double>::quiet_NaN();
    RunRecord back = run_record_from_json(to_json(r));
    CHECK(std::isnan(back.F_dense));
    CHECK(std::isnan(back.F_six));
}

TEST_CASE("reproducible form hides only volatile fields") {
    RunRecord a = make_record();
    RunRecord b = make_record();
    b.created = "2031-12-31T23:59:59Z";
    CHECK(to_json(a) != to_json(b));
    CHECK(reproducible_json(a) == reproducible_json(b));
    b.final_F = 1.0;
    CHECK(reproducible_json(a) != reproducible_json(b));
}

TEST_CASE("schema version is enforced") {
    RunRecord r = make_record();
    std::string text = to_json(r);
    auto pos = text.find("\"schema_version\": 1");
    REQUIRE(pos != std::string::npos);
    std::string bad = text;
    bad.replace(pos, 19, "\"schema_version\": 2");
    CHECK_THROWS_AS(run_record_from_json(bad), std::invalid_argument);
    CHECK_THROWS_AS(run_record_from_json("{\"kind\": \"other\"}"), std::invalid_argument);
}

TEST_CASE("record file round trip") {
    RunRecord r = make_record();
    const std::string path = "/tmp/cmcforge_test_record.json";
    save_run_record(r, path);
    RunRecord back = load_run_record(path);
    CHECK(reproducible_json(back) == reproducible_json(r));
    std::remove(path.c_str());
    CHECK_THROWS(load_run_record("/tmp/definitely_missing_dir/x.json"));
}

TEST_CASE("solve input parsing with defaults") {
    const char* text = R"({
      "params": {
        "genus": 2,
        "z0": [0.7071067811865476, -0.7071067811865476],
        "z1": [0.7071067811865476, 0.7071067811865476],
        "lambda1": [0.0, 1.0],
        "lambda2": [0.0, -1.0],
        "rectangular": true,
        "even_lambda": true
      },
      "search": { "K": 16, "target_F": 1e-6, "seed": 3 }
    })";
    SolveInput in = solve_input_from_json(text);
    CHECK(in.params.genus == 2);
    CHECK(in.params.rectangular);
    CHECK(in.config.K == 16);
    CHECK(in.config.seed == 3);
    CHECK(in.config.ladder == std::vector<int>{2, 4, 6, 8}); // untouched default
    CHECK(!in.init.has_value());
    CHECK(!in.family.has_value());
    SolveInput round = solve_input_from_json(to_json(in));
    CHECK(round.config.K == in.config.K);
    CHECK(std::abs(round.params.z0 - in.params.z0) == 0.0);
    CHECK_THROWS(solve_input_from_json("{\"kind\": \"run_record\", \"params\": {}}"));
}

TEST_CASE("family table lists one row per record") {
    RunRecord r = make_record();
    std::vector<RunRecord> recs{r, r};
    recs[1].driver_value = 0.88;
    std::string csv = family_summary_csv(recs);
    std::istringstream ss(csv);
    std::string line;
    int rows = 0;
    bool header = false;
    while (std::getline(ss, line)) {
        if (rows == 0) header = line.find("driver") != std::string::npos;
        ++rows;
    }
    CHECK(header);
    CHECK(rows == 3);
}
