#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "support.hpp"

using namespace mtdsim;

namespace {

std::map<std::string, scan_report> deployed_from(const std::vector<scan_report>& reports) {
    std::map<std::string, scan_report> out;
    for (const auto& r : reports) out.emplace(r.service, r);
    return out;
}

attacker_script lateral_script() {
    attacker_script s;
    s.name = "vets-traversal-replay";
    s.scope = matrix_scope::horizontal;
    s.steps = {{"api-gateway", 16, layer::application}, {"vets-service", 425, layer::application}};
    return s;
}

attacker_script vertical_script() {
    attacker_script s;
    s.name = "gateway-vertical-chain";
    s.scope = matrix_scope::vertical;
    s.steps = {{"api-gateway", 200, layer::application},
               {"api-gateway", 200, layer::image},
               {"customers-service", 200, layer::application}};
    return s;
}

} // namespace

TEST_CASE("script validation") {
    CHECK_NOTHROW(lateral_script().validate());
    CHECK_NOTHROW(vertical_script().validate());

    SECTION("horizontal scripts stay on the application layer") {
        attacker_script s = lateral_script();
        s.steps.push_back({"api-gateway", 119, layer::image});
        CHECK_THROWS_AS(s.validate(), validation_error);
    }
    SECTION("vertical scripts must touch both layers") {
        attacker_script s = vertical_script();
        s.steps = {{"api-gateway", 200, layer::application}};
        CHECK_THROWS_AS(s.validate(), validation_error);
    }
    SECTION("no steps") {
        attacker_script s = lateral_script();
        s.steps.clear();
        CHECK_THROWS_AS(s.validate(), validation_error);
    }
    SECTION("empty name") {
        attacker_script s = lateral_script();
        s.name.clear();
        CHECK_THROWS_AS(s.validate(), validation_error);
    }
}

TEST_CASE("script parsing") {
    const auto doc = nlohmann::json::parse(R"({
        "name": "probe",
        "scope": "horizontal",
        "steps": [{"service": "a", "cwe_id": 79, "layer": "application"}]
    })");
    const attacker_script s = parse_attacker_script(doc);
    CHECK(s.name == "probe");
    CHECK(s.steps.size() == 1);
    CHECK(s.steps[0].cwe_id == 79);

    auto bad = doc;
    bad["persistence"] = true;
    CHECK_THROWS_AS(parse_attacker_script(bad), parse_error);
    bad = doc;
    bad["scope"] = "diagonal";
    CHECK_THROWS_AS(parse_attacker_script(bad), parse_error);
}

TEST_CASE("replaying scripts against deployed variants") {
    const auto homogeneous = deployed_from(petclinic_reports());
    const auto diversified = deployed_from(petclinic_diversified_reports());

    SECTION("both chains succeed on the all-Java deployment") {
        CHECK(replay_script(lateral_script(), homogeneous).success);
        CHECK(replay_script(vertical_script(), homogeneous).success);
    }
    SECTION("the lateral chain dies when vets drops its entry class") {
        const replay_result res = replay_script(lateral_script(), diversified);
        CHECK_FALSE(res.success);
        REQUIRE(res.blocked_at.has_value());
        CHECK(res.blocked_at->service == "vets-service");
        CHECK(res.blocked_at->cwe_id == 425);
    }
    SECTION("the vertical chain dies at the rewritten customers service") {
        const replay_result res = replay_script(vertical_script(), diversified);
        CHECK_FALSE(res.success);
        REQUIRE(res.blocked_at.has_value());
        CHECK(res.blocked_at->service == "customers-service");
    }
    SECTION("unknown target service is an input error") {
        attacker_script s = lateral_script();
        s.steps[0].service = "billing-service";
        CHECK_THROWS_AS(replay_script(s, homogeneous), validation_error);
    }
    SECTION("a zero-count finding does not satisfy a step") {
        auto deployed = homogeneous;
        for (auto& f : deployed.at("vets-service").findings)
            if (f.vuln.cwe_id == 425) f.count = 0;
        CHECK_FALSE(replay_script(lateral_script(), deployed).success);
    }
}

TEST_CASE("compromise bookkeeping") {
    cluster_state st = make_cluster(3);
    std::vector<compromise_record> records;

    SECTION("active nodes can be hit once") {
        CHECK(inject_compromise(st, records, 2, 100, "test"));
        CHECK_FALSE(inject_compromise(st, records, 2, 200, "test"));
        REQUIRE(records.size() == 1);
        CHECK(records[0].open());
        CHECK(records[0].node == 2);
        CHECK(records[0].start == 100);
        CHECK(st.nodes.at(2).compromised);
    }
    SECTION("non-active nodes are not valid targets") {
        CHECK_FALSE(inject_compromise(st, records, 99, 0, "test"));
        begin_drain(st, 1);
        CHECK_FALSE(inject_compromise(st, records, 1, 0, "test"));
        CHECK(records.empty());
    }
    SECTION("termination closes the dwell interval") {
        inject_compromise(st, records, 2, 100, "test");
        CHECK(close_dwell_on_termination(records, 2, 500) == 1);
        CHECK_FALSE(records[0].open());
        CHECK(records[0].dwell_ms() == 400);
        CHECK(close_dwell_on_termination(records, 2, 900) == 0); // already closed
        CHECK(close_dwell_on_termination(records, 3, 900) == 0); // never compromised
    }
    SECTION("dwell of an open record is undefined") {
        inject_compromise(st, records, 1, 0, "test");
        CHECK_THROWS_AS(records[0].dwell_ms(), internal_error);
    }
}

TEST_CASE("dwell statistics") {
    SECTION("empty series") {
        const dwell_stats st = dwell_metrics({});
        CHECK(st.total == 0);
        CHECK(st.closed == 0);
        CHECK(st.median_s == 0.0);
    }
    SECTION("median takes the lower middle, open records are excluded") {
        std::vector<compromise_record> recs;
        for (sim_ms d : {4000, 1000, 3000, 2000})
            recs.push_back({1, 0, d, "x"});
        recs.push_back({2, 0, -1, "x"}); // still open
        const dwell_stats st = dwell_metrics(recs);
        CHECK(st.total == 5);
        CHECK(st.open == 1);
        CHECK(st.closed == 4);
        CHECK(st.median_s == 2.0); // lower middle of {1,2,3,4} seconds
        CHECK(st.mean_s == 2.5);
        CHECK(st.min_s == 1.0);
        CHECK(st.max_s == 4.0);
    }
    SECTION("odd count median is the middle value") {
        std::vector<compromise_record> recs;
        for (sim_ms d : {9000, 1000, 5000}) recs.push_back({1, 0, d, "x"});
        CHECK(dwell_metrics(recs).median_s == 5.0);
    }
}

TEST_CASE("baseline detection window constant") {
    CHECK(default_baseline_detection_s == 8553600); // 99 days
}
