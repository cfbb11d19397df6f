// Command-line front end: scenario runs, risk scoring, diversification
// planning and correlation matrices over scan-report files.
//
// Exit codes: 0 on success, 1 for input or validation problems, 2 when an
// internal invariant trips.

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtdsim/mtdsim.hpp"

namespace {

std::vector<mtdsim::scan_report> load_reports(const std::vector<std::string>& paths) {
    std::vector<mtdsim::scan_report> reports;
    reports.reserve(paths.size());
    for (const auto& p : paths) reports.push_back(mtdsim::load_scan_report(p));
    return reports;
}

int cmd_run(const std::string& scenario_path, std::optional<std::int64_t> seed,
            const std::string& out_path, const std::string& format) {
    mtdsim::scenario sc = mtdsim::load_scenario(scenario_path);
    if (seed) sc.seed = static_cast<std::uint64_t>(*seed);
    const mtdsim::metrics_report report = mtdsim::run_scenario(std::move(sc));
    const mtdsim::output_format fmt = mtdsim::parse_output_format(format);
    if (out_path.empty())
        std::cout << mtdsim::render_report(report, fmt);
    else
        mtdsim::emit_report(report, out_path, fmt);
    return 0;
}

int cmd_risk(const std::vector<std::string>& paths, const std::string& table_path) {
    const mtdsim::owasp_score_table table =
        table_path.empty() ? mtdsim::builtin_owasp_table() : mtdsim::load_owasp_table(table_path);
    std::vector<mtdsim::security_risk> risks;
    for (const auto& rep : load_reports(paths))
        risks.push_back(mtdsim::service_risk_orrm(rep, table));
    std::stable_sort(risks.begin(), risks.end(),
                     [](const mtdsim::security_risk& a, const mtdsim::security_risk& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.service < b.service;
                     });
    std::cout << std::left << std::setw(6) << "rank" << std::setw(24) << "service" << std::right
              << std::setw(10) << "score" << "  method\n";
    std::size_t rank = 1;
    for (const auto& r : risks) {
        std::cout << std::left << std::setw(6) << rank++ << std::setw(24) << r.service << std::right
                  << std::setw(10) << std::fixed << std::setprecision(1) << r.score << "  "
                  << mtdsim::to_string(r.method) << "\n";
    }
    return 0;
}

int cmd_plan(const std::vector<std::string>& paths, const std::string& index_text,
             std::uint64_t seed) {
    const mtdsim::ratio index = mtdsim::parse_index(index_text);

    // First report listed for a service is its currently deployed variant;
    // later ones add replacement candidates.
    std::map<std::string, std::string> current;
    std::map<std::string, std::set<std::string>> variants;
    std::map<std::string, mtdsim::scan_report> current_reports;
    for (const auto& rep : load_reports(paths)) {
        if (!current.contains(rep.service)) {
            current[rep.service] = rep.variant;
            current_reports[rep.service] = rep;
        }
        const bool fresh = variants[rep.service].insert(rep.variant).second;
        mtdsim::require(fresh, "duplicate report for service \"" + rep.service + "\" variant \"" +
                                   rep.variant + "\"");
    }

    const mtdsim::owasp_score_table table = mtdsim::builtin_owasp_table();
    std::vector<mtdsim::security_risk> risks;
    for (const auto& [service, rep] : current_reports)
        risks.push_back(mtdsim::service_risk_orrm(rep, table));

    const mtdsim::diversification_plan plan =
        mtdsim::plan_diversification(std::move(risks), index, variants, current, seed);

    nlohmann::ordered_json doc;
    doc["index"] = plan.index.str();
    doc["ranking"] = nlohmann::ordered_json::array();
    for (const auto& r : plan.ranked)
        doc["ranking"].push_back({{"service", r.service}, {"score", r.score}});
    doc["assignments"] = nlohmann::ordered_json::object();
    for (const auto& [service, variant] : plan.assignments) {
        doc["assignments"][service] = {{"from", current.at(service)}, {"to", variant}};
    }
    doc["unchanged"] = plan.unchanged;
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int cmd_matrix(const std::vector<std::string>& paths, const std::string& scope_text) {
    const mtdsim::matrix_scope scope = mtdsim::parse_matrix_scope(scope_text);
    const std::vector<mtdsim::scan_report> reports = load_reports(paths);
    const mtdsim::correlation_matrix matrix = mtdsim::build_correlation_matrix(reports, scope);

    nlohmann::ordered_json doc;
    doc["scope"] = mtdsim::to_string(scope);
    const auto grid = mtdsim::matrix_to_json(matrix);
    for (const auto& [key, value] : grid.items()) doc[key] = value;
    doc["correlated_pairs"] = nlohmann::ordered_json::array();
    for (const auto& pair : mtdsim::correlated_pairs(matrix))
        doc["correlated_pairs"].push_back(
            {{"first", pair.first}, {"second", pair.second}, {"shared", pair.shared}});
    std::cout << doc.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Moving-target-defense simulator and risk toolkit for cloud-native applications"};
    app.require_subcommand(1);

    std::string scenario_path, out_path, format = "json";
    std::optional<std::int64_t> seed_override;
    auto* run = app.add_subcommand("run", "Simulate a scenario file to its horizon");
    run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--seed", seed_override, "Override the scenario seed");
    run->add_option("--out", out_path, "Write the report to this file instead of stdout");
    run->add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    std::vector<std::string> risk_reports;
    std::string table_path;
    auto* risk = app.add_subcommand("risk", "Rank services by aggregated risk score");
    risk->add_option("reports", risk_reports, "Scan report JSON files")->required()->expected(-1);
    risk->add_option("--table", table_path, "CWE score table JSON (defaults to the built-in table)");

    std::vector<std::string> plan_reports;
    std::string index_text;
    std::uint64_t plan_seed = 0;
    auto* plan = app.add_subcommand("plan", "Pick replacement variants for the riskiest services");
    plan->add_option("reports", plan_reports,
                     "Scan report JSON files; the first per service is the deployed variant")
        ->required()
        ->expected(-1);
    plan->add_option("--index", index_text, "Diversification index, e.g. 3:4")->required();
    plan->add_option("--seed", plan_seed, "Seed for variant selection")->capture_default_str();

    std::vector<std::string> matrix_reports;
    std::string scope_text = "horizontal";
    auto* matrix = app.add_subcommand("matrix", "Service x weakness-class correlation matrix");
    matrix->add_option("reports", matrix_reports, "Scan report JSON files")->required()->expected(-1);
    matrix->add_option("--scope", scope_text, "Attack surface scope")
        ->check(CLI::IsMember({"horizontal", "vertical"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(scenario_path, seed_override, out_path, format);
        if (risk->parsed()) return cmd_risk(risk_reports, table_path);
        if (plan->parsed()) return cmd_plan(plan_reports, index_text, plan_seed);
        if (matrix->parsed()) return cmd_matrix(matrix_reports, scope_text);
    } catch (const mtdsim::internal_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const mtdsim::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
