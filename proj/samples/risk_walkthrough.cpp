// Score the bundled scan reports, plan a 3:4 variant switch and measure the
// attack-surface reduction it would deliver.

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mtdsim/mtdsim.hpp"

using namespace mtdsim;

int main() {
    const std::filesystem::path fixtures(MTDSIM_FIXTURES_DIR);
    const auto base = fixtures / "petclinic";

    const std::vector<scan_report> deployed = {
        load_scan_report(base / "api-gateway.json"),
        load_scan_report(base / "customers-service.json"),
        load_scan_report(base / "vets-service.json"),
        load_scan_report(base / "visits-service.json"),
    };

    const owasp_score_table table = builtin_owasp_table();
    std::vector<security_risk> risks;
    std::cout << "service risk (count-weighted impact sum):\n";
    for (const auto& rep : deployed) {
        risks.push_back(service_risk_orrm(rep, table));
        std::cout << "  " << rep.service << " (" << rep.variant << "): " << risks.back().score
                  << "\n";
    }

    const std::map<std::string, std::set<std::string>> variants = {
        {"api-gateway", {"java", "python"}},
        {"customers-service", {"java", "nodejs"}},
        {"vets-service", {"java", "ruby"}},
        {"visits-service", {"java"}},
    };
    std::map<std::string, std::string> current;
    for (const auto& rep : deployed) current[rep.service] = rep.variant;

    const diversification_plan plan =
        plan_diversification(risks, parse_index("3:4"), variants, current, 7);
    std::cout << "\nplanned switches (index " << plan.index.str() << "):\n";
    for (const auto& [service, variant] : plan.assignments)
        std::cout << "  " << service << ": " << current[service] << " -> " << variant << "\n";
    for (const auto& service : plan.unchanged) std::cout << "  " << service << ": unchanged\n";

    const std::vector<scan_report> after = {
        load_scan_report(base / "diversified" / "api-gateway.json"),
        load_scan_report(base / "diversified" / "customers-service.json"),
        load_scan_report(base / "diversified" / "vets-service.json"),
        load_scan_report(base / "visits-service.json"),
    };

    const reduction_report rep = evaluate_plan(deployed, after);
    std::cout << "\nattack-surface units before and after:\n";
    for (const auto& s : rep.services) {
        std::cout << "  " << s.service << ": app " << s.application.before << " -> "
                  << s.application.after;
        if (s.application.reduction_pct)
            std::cout << " (" << *s.application.reduction_pct << "% less)";
        std::cout << "\n";
    }
    std::cout << "  application total: " << rep.application_total.before << " -> "
              << rep.application_total.after;
    if (rep.application_total.reduction_pct)
        std::cout << " (" << *rep.application_total.reduction_pct << "% less)";
    std::cout << "\n";
    return 0;
}
