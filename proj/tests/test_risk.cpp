#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "support.hpp"

using namespace mtdsim;
using Catch::Matchers::WithinAbs;

TEST_CASE("severity averaging") {
    CHECK(sr_average(std::vector<double>{5.0}) == 5.0);
    CHECK(sr_average(std::vector<double>{4.0, 6.0}) == 5.0);
    CHECK_THROWS_AS(sr_average(std::vector<double>{}), validation_error);
    CHECK_THROWS_AS(sr_average(std::vector<double>{11.0}), validation_error);
    CHECK_THROWS_AS(sr_average(std::vector<double>{-0.5}), validation_error);
}

TEST_CASE("shrinkage blend on the bundled gateway numbers") {
    // Hand-derived: 94 detections, prior mass 5, service mean 431/94,
    // application-wide mean 713/167. Blend = 6659953/1554102.
    shrinkage_params p;
    p.vuln_count = 94;
    p.prior_weight = 5;
    p.service_mean = 431.0 / 94.0;
    p.application_mean = 713.0 / 167.0;
    CHECK_THAT(sr_shrinkage(p), WithinAbs(6659953.0 / 1554102.0, 1e-12));

    // Swapped convention: count share on the service mean. 75542/16533.
    CHECK_THAT(sr_shrinkage(p, shrinkage_weighting::count_on_service_mean),
               WithinAbs(75542.0 / 16533.0, 1e-12));
}

TEST_CASE("shrinkage edge cases are exact") {
    shrinkage_params p;
    p.service_mean = 7.25;
    p.application_mean = 3.5;

    p.vuln_count = 0;
    p.prior_weight = 5;
    CHECK(sr_shrinkage(p) == p.service_mean);

    p.vuln_count = 42;
    p.prior_weight = 0;
    CHECK(sr_shrinkage(p) == p.application_mean);

    p.vuln_count = 0;
    p.prior_weight = 0;
    CHECK_THROWS_AS(sr_shrinkage(p), validation_error);

    p.vuln_count = -1;
    p.prior_weight = 5;
    CHECK_THROWS_AS(sr_shrinkage(p), validation_error);

    p.vuln_count = 1;
    p.service_mean = 12.0;
    CHECK_THROWS_AS(sr_shrinkage(p), validation_error);
}

TEST_CASE("shrinkage stays between its inputs") {
    rng_stream rng(12345);
    for (int i = 0; i < 2000; ++i) {
        shrinkage_params p;
        p.vuln_count = static_cast<long long>(rng.pick_index(200));
        p.prior_weight = static_cast<long long>(rng.pick_index(50));
        if (p.vuln_count + p.prior_weight == 0) p.prior_weight = 1;
        p.service_mean = static_cast<double>(rng.pick_index(1000)) / 100.0;
        p.application_mean = static_cast<double>(rng.pick_index(1000)) / 100.0;
        const double sr = sr_shrinkage(p);
        CHECK(sr >= std::min(p.service_mean, p.application_mean) - 1e-12);
        CHECK(sr <= std::max(p.service_mean, p.application_mean) + 1e-12);
    }
}

TEST_CASE("class score table") {
    const owasp_score_table table = builtin_owasp_table();
    CHECK(table.score_for(16) == 6.0);
    CHECK(table.score_for(22) == 6.0);
    CHECK(table.score_for(79) == 6.0);
    CHECK(table.score_for(200) == 7.0);
    CHECK(table.score_for(425) == 3.0);
    CHECK(table.score_for(524) == 3.0);
    CHECK(table.score_for(933) == 3.0);
    CHECK(cwe_score(table, 119) == 3.0); // unlisted classes take the default

    SECTION("bundled table file matches the built-in") {
        CHECK(load_owasp_table(fixtures_dir() / "owasp-cwe-scores.json") == table);
    }
    SECTION("rejects out-of-range and junk") {
        CHECK_THROWS_AS(parse_owasp_table(nlohmann::json::parse(R"({"scores": {"16": 11.0}, "default": 3.0})")),
                        validation_error);
        CHECK_THROWS_AS(parse_owasp_table(nlohmann::json::parse(R"({"scores": {"abc": 3.0}, "default": 3.0})")),
                        parse_error);
        CHECK_THROWS_AS(parse_owasp_table(nlohmann::json::parse(R"({"scores": {}})")), parse_error);
    }
}

TEST_CASE("likelihood times impact") {
    CHECK(orrm_risk(2.0, 3.0) == 6.0);
    CHECK(orrm_risk(0.0, 9.0) == 0.0);
    CHECK_THROWS_AS(orrm_risk(-1.0, 3.0), validation_error);
    CHECK_THROWS_AS(orrm_risk(1.0, -3.0), validation_error);
}

TEST_CASE("per-service risk over the bundled reports") {
    const auto reports = petclinic_reports();
    const owasp_score_table table = builtin_owasp_table();

    CHECK(service_risk_orrm(reports[0], table).score == 431.0);
    CHECK(service_risk_orrm(reports[1], table).score == 141.0);
    CHECK(service_risk_orrm(reports[2], table).score == 90.0);
    CHECK(service_risk_orrm(reports[3], table).score == 51.0);
    CHECK(service_risk_orrm(reports[0], table).method == risk_method::orrm_sum);

    SECTION("count-weighted average variant") {
        const security_risk avg =
            service_risk_orrm(reports[0], table, orrm_aggregation::weighted_average);
        CHECK(avg.score == 431.0 / 94.0);
        CHECK(avg.method == risk_method::orrm_average);
    }
    SECTION("image-only report has no application risk") {
        scan_report r;
        r.service = "img-only";
        r.variant = "v";
        finding f;
        f.vuln = {"x", 119, layer::image, 7.5, scoring_source::cvss};
        f.count = 3;
        r.findings.push_back(f);
        CHECK_THROWS_AS(service_risk_orrm(r, table), validation_error);
    }
}

TEST_CASE("mean severity per layer") {
    const auto reports = petclinic_reports();
    const auto app = mean_severity(reports[0], layer::application);
    REQUIRE(app.has_value());
    CHECK(*app == 431.0 / 94.0);

    scan_report empty;
    empty.service = "s";
    empty.variant = "v";
    CHECK_FALSE(mean_severity(empty, layer::application).has_value());
}

TEST_CASE("shrinkage parameters derived from reports") {
    const auto reports = petclinic_reports();
    const shrinkage_params p = shrinkage_from_reports(reports[0], reports, 5);
    CHECK(p.vuln_count == 94);
    CHECK(p.prior_weight == 5);
    CHECK(p.service_mean == 431.0 / 94.0);
    CHECK(p.application_mean == 713.0 / 167.0);
}

TEST_CASE("diversification index") {
    CHECK(diversification_index(3, 4).str() == "3:4");
    CHECK(diversification_index(2, 4).str() == "2:4"); // no reduction to 1:2
    CHECK(diversification_index(0, 4).value() == 0.0);
    CHECK_THROWS_AS(diversification_index(5, 4), validation_error);
    CHECK_THROWS_AS(diversification_index(-1, 4), validation_error);
    CHECK_THROWS_AS(diversification_index(1, 0), validation_error);

    CHECK(parse_index("3:4") == ratio{3, 4});
    CHECK_THROWS_AS(parse_index("5:4"), validation_error);
    CHECK_THROWS_AS(parse_index("34"), parse_error);
    CHECK_THROWS_AS(parse_index("a:b"), parse_error);
}

namespace {

std::map<std::string, std::set<std::string>> petclinic_variants() {
    return {
        {"api-gateway", {"java", "python"}},
        {"customers-service", {"java", "nodejs"}},
        {"vets-service", {"java", "ruby"}},
        {"visits-service", {"java"}},
    };
}

std::map<std::string, std::string> all_java() {
    return {{"api-gateway", "java"},
            {"customers-service", "java"},
            {"vets-service", "java"},
            {"visits-service", "java"}};
}

std::vector<security_risk> petclinic_risks() {
    std::vector<security_risk> risks;
    const owasp_score_table table = builtin_owasp_table();
    for (const auto& r : petclinic_reports()) risks.push_back(service_risk_orrm(r, table));
    return risks;
}

} // namespace

TEST_CASE("variant planning picks the riskiest services") {
    const diversification_plan plan =
        plan_diversification(petclinic_risks(), {3, 4}, petclinic_variants(), all_java(), 99);

    REQUIRE(plan.ranked.size() == 4);
    CHECK(plan.ranked[0].service == "api-gateway");
    CHECK(plan.ranked[1].service == "customers-service");
    CHECK(plan.ranked[2].service == "vets-service");
    CHECK(plan.ranked[3].service == "visits-service");

    CHECK(plan.assignments ==
          std::map<std::string, std::string>{{"api-gateway", "python"},
                                             {"customers-service", "nodejs"},
                                             {"vets-service", "ruby"}});
    CHECK(plan.unchanged == std::vector<std::string>{"visits-service"});
    CHECK(plan.index.str() == "3:4");
}

TEST_CASE("variant planning failure modes") {
    SECTION("index denominator must match service count") {
        CHECK_THROWS_AS(
            plan_diversification(petclinic_risks(), {3, 5}, petclinic_variants(), all_java(), 0),
            validation_error);
    }
    SECTION("selected service without an alternative") {
        auto variants = petclinic_variants();
        variants["api-gateway"] = {"java"};
        CHECK_THROWS_AS(plan_diversification(petclinic_risks(), {3, 4}, variants, all_java(), 0),
                        planning_error);
    }
    SECTION("unselected service may be single-variant") {
        CHECK_NOTHROW(
            plan_diversification(petclinic_risks(), {3, 4}, petclinic_variants(), all_java(), 0));
    }
    SECTION("ties rank by name") {
        std::vector<security_risk> risks{{"b", 10.0, risk_method::orrm_sum},
                                         {"a", 10.0, risk_method::orrm_sum}};
        const diversification_plan plan = plan_diversification(
            risks, {0, 2}, {{"a", {"x"}}, {"b", {"x"}}}, {{"a", "x"}, {"b", "x"}}, 0);
        CHECK(plan.ranked[0].service == "a");
        CHECK(plan.ranked[1].service == "b");
    }
}

TEST_CASE("seeded variant choice is reproducible") {
    auto variants = petclinic_variants();
    variants["api-gateway"] = {"java", "python", "go", "rust"};
    const auto a = plan_diversification(petclinic_risks(), {3, 4}, variants, all_java(), 7);
    const auto b = plan_diversification(petclinic_risks(), {3, 4}, variants, all_java(), 7);
    CHECK(a == b);
    CHECK(a.assignments.at("api-gateway") != "java");
}

TEST_CASE("attack surface deltas") {
    CHECK(make_delta(0, 0).reduction_pct == std::nullopt);
    const layer_delta d = make_delta(94, 24);
    REQUIRE(d.reduction_pct.has_value());
    CHECK_THAT(*d.reduction_pct, WithinAbs(7000.0 / 94.0, 1e-12));
}

TEST_CASE("plan evaluation over the bundled before and after sets") {
    const reduction_report rep =
        evaluate_plan(petclinic_reports(), petclinic_diversified_reports());

    REQUIRE(rep.services.size() == 4);
    CHECK(rep.services[0].service == "api-gateway"); // ascending name order

    const service_reduction& gw = rep.services[0];
    CHECK(gw.application.before == 94);
    CHECK(gw.application.after == 24);
    CHECK_THAT(*gw.application.reduction_pct, WithinAbs(7000.0 / 94.0, 1e-9));
    CHECK(gw.image.before == 696);
    CHECK(gw.image.after == 6);
    CHECK_THAT(*gw.image.reduction_pct, WithinAbs(69000.0 / 696.0, 1e-9));
    CHECK(gw.combined.before == 790);
    CHECK(gw.combined.after == 30);
    CHECK(*gw.combined.reduction_pct > 95.0);

    CHECK(rep.application_total.before == 167);
    CHECK(rep.application_total.after == 78);
    CHECK_THAT(*rep.application_total.reduction_pct, WithinAbs(8900.0 / 167.0, 1e-9));

    SECTION("service sets must match") {
        auto after = petclinic_diversified_reports();
        after.pop_back();
        CHECK_THROWS_AS(evaluate_plan(petclinic_reports(), after), validation_error);
    }
    SECTION("duplicate services rejected") {
        auto before = petclinic_reports();
        before.push_back(before.front());
        CHECK_THROWS_AS(evaluate_plan(before, petclinic_diversified_reports()), validation_error);
    }
}
