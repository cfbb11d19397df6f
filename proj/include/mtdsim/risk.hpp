#pragma once

// Per-microservice security risk scoring (CVSS mean, shrinkage blend, OWASP
// likelihood x impact), the diversification index, risk-ordered variant
// planning and before/after surface evaluation.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtdsim/errors.hpp"
#include "mtdsim/rng.hpp"
#include "mtdsim/vuln.hpp"

namespace mtdsim {

enum class risk_method { cvss_average, cvss_shrinkage, orrm_sum, orrm_average };

inline std::string to_string(risk_method m) {
    switch (m) {
        case risk_method::cvss_average: return "cvss_average";
        case risk_method::cvss_shrinkage: return "cvss_shrinkage";
        case risk_method::orrm_sum: return "orrm_sum";
        case risk_method::orrm_average: return "orrm_average";
    }
    return "?";
}

struct security_risk {
    std::string service;
    double score = 0.0;
    risk_method method = risk_method::orrm_sum;

    bool operator==(const security_risk&) const = default;
};

/// Arithmetic mean of base scores. An empty list is an error; risk is
/// undefined there and must not collapse to 0.
inline double sr_average(std::span<const double> severities) {
    require(!severities.empty(), "sr_average: empty severity list, risk undefined");
    double sum = 0;
    for (double s : severities) {
        require(s >= 0.0 && s <= 10.0, "sr_average: severity out of [0, 10]");
        sum += s;
    }
    return sum / static_cast<double>(severities.size());
}

/// Shrinkage blend of the service-level mean severity and the
/// application-wide mean severity.
///   vuln_count      - vulnerabilities detected in the service (v)
///   prior_weight    - minimum-detection threshold acting as prior mass (a)
///   service_mean    - mean severity within the service (C)
///   application_mean- mean severity across the whole application (R)
struct shrinkage_params {
    long long vuln_count = 0;
    long long prior_weight = 0;
    double service_mean = 0.0;
    double application_mean = 0.0;
};

/// Which mean receives the count-proportional weight v/(v+a). The default
/// puts it on the application-wide mean; `count_on_service_mean` is the
/// conventional rating-system form.
enum class shrinkage_weighting { count_on_application_mean, count_on_service_mean };

inline double sr_shrinkage(const shrinkage_params& p,
                           shrinkage_weighting w = shrinkage_weighting::count_on_application_mean) {
    require(p.vuln_count >= 0, "sr_shrinkage: vuln_count must be >= 0");
    require(p.prior_weight >= 0, "sr_shrinkage: prior_weight must be >= 0");
    require(p.vuln_count + p.prior_weight > 0, "sr_shrinkage: vuln_count + prior_weight must be > 0");
    require(p.service_mean >= 0.0 && p.service_mean <= 10.0, "sr_shrinkage: service_mean out of [0, 10]");
    require(p.application_mean >= 0.0 && p.application_mean <= 10.0,
            "sr_shrinkage: application_mean out of [0, 10]");

    const double v = static_cast<double>(p.vuln_count);
    const double a = static_cast<double>(p.prior_weight);
    const double count_share = v / (v + a);
    const double prior_share = a / (v + a);
    if (w == shrinkage_weighting::count_on_application_mean)
        return count_share * p.application_mean + prior_share * p.service_mean;
    return count_share * p.service_mean + prior_share * p.application_mean;
}

/// Risk = Likelihood * Impact.
inline double orrm_risk(double likelihood, double impact) {
    require(likelihood >= 0.0, "orrm_risk: likelihood must be >= 0");
    require(impact >= 0.0, "orrm_risk: impact must be >= 0");
    return likelihood * impact;
}

/// CWE id -> risk score mapping with a default for unlisted classes.
struct owasp_score_table {
    std::map<int, double> scores;
    double default_score = 3.0;

    bool operator==(const owasp_score_table&) const = default;

    double score_for(int cwe_id) const {
        auto it = scores.find(cwe_id);
        return it == scores.end() ? default_score : it->second;
    }
};

inline double cwe_score(const owasp_score_table& table, int cwe_id) {
    return table.score_for(cwe_id);
}

/// OWASP Top-10 derived scores for the weakness classes in the bundled
/// PetClinic corpus; unlisted classes score 3.0.
inline owasp_score_table builtin_owasp_table() {
    owasp_score_table t;
    t.scores = {{16, 6.0}, {22, 6.0}, {79, 6.0}, {200, 7.0}, {425, 3.0}, {524, 3.0}, {933, 3.0}};
    t.default_score = 3.0;
    return t;
}

/// Loads { "scores": {"16": 6.0, ...}, "default": 3.0 }.
inline owasp_score_table parse_owasp_table(const nlohmann::json& doc) {
    if (!doc.is_object()) throw parse_error("score table: expected JSON object");
    detail::reject_unknown_keys(doc, {"scores", "default", "comment"}, "score table");
    owasp_score_table t;
    const auto& scores = detail::member(doc, "scores", "score table");
    if (!scores.is_object()) throw parse_error("scores: expected object");
    for (const auto& [key, value] : scores.items()) {
        int cwe = 0;
        try {
            cwe = std::stoi(key);
        } catch (const std::exception&) {
            throw parse_error("scores: key \"" + key + "\" is not a CWE id");
        }
        const double s = detail::as_number(value, "scores[\"" + key + "\"]");
        require(s >= 0.0 && s <= 10.0, "scores[\"" + key + "\"]: must be in [0, 10]");
        t.scores[cwe] = s;
    }
    t.default_score = detail::as_number(detail::member(doc, "default", "score table"), "default");
    require(t.default_score >= 0.0 && t.default_score <= 10.0, "default: must be in [0, 10]");
    return t;
}

inline owasp_score_table load_owasp_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open score table: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path.string() + ": invalid JSON: " + std::string(e.what()));
    }
    return parse_owasp_table(doc);
}

enum class orrm_aggregation { weighted_sum, weighted_average };

/// Count-weighted aggregation of per-class scores over application-layer
/// findings. The sum is the default; the average is available for
/// comparison runs but reorders low-count services.
inline security_risk service_risk_orrm(const scan_report& report, const owasp_score_table& table,
                                       orrm_aggregation agg = orrm_aggregation::weighted_sum) {
    double sum = 0;
    long long units = 0;
    for (const auto& f : report.findings) {
        if (f.vuln.layer != layer::application) continue;
        sum += static_cast<double>(f.count) * table.score_for(f.vuln.cwe_id);
        units += f.count;
    }
    require(units > 0, "service_risk_orrm: report for \"" + report.service +
                           "\" has no application-layer findings");
    if (agg == orrm_aggregation::weighted_sum)
        return {report.service, sum, risk_method::orrm_sum};
    return {report.service, sum / static_cast<double>(units), risk_method::orrm_average};
}

/// Count-weighted mean severity at a layer, empty when no instances.
inline std::optional<double> mean_severity(const scan_report& report, layer which) {
    double sum = 0;
    long long n = 0;
    for (const auto& f : report.findings) {
        if (f.vuln.layer != which) continue;
        sum += static_cast<double>(f.count) * f.vuln.severity;
        n += f.count;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

/// Builds shrinkage parameters from one service's report and the whole
/// application's report set. Means default to 0 when no instances exist.
inline shrinkage_params shrinkage_from_reports(const scan_report& service_report,
                                               const std::vector<scan_report>& all_reports,
                                               long long prior_weight = 5,
                                               layer which = layer::application) {
    shrinkage_params p;
    p.vuln_count = attack_surface_units(service_report, which);
    p.prior_weight = prior_weight;
    p.service_mean = mean_severity(service_report, which).value_or(0.0);
    double sum = 0;
    long long n = 0;
    for (const auto& r : all_reports) {
        for (const auto& f : r.findings) {
            if (f.vuln.layer != which) continue;
            sum += static_cast<double>(f.count) * f.vuln.severity;
            n += f.count;
        }
    }
    p.application_mean = n == 0 ? 0.0 : sum / static_cast<double>(n);
    return p;
}

/// Fraction of microservices selected for variant replacement, rendered
/// as "m_d:m" without reduction.
struct ratio {
    long long num = 0;
    long long den = 1;

    bool operator==(const ratio&) const = default;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return std::to_string(num) + ":" + std::to_string(den); }
};

inline ratio diversification_index(long long diversified, long long total) {
    require(total >= 1, "diversification_index: total must be >= 1");
    require(diversified >= 0, "diversification_index: diversified count must be >= 0");
    require(diversified <= total, "diversification_index: diversified count " +
                                      std::to_string(diversified) + " exceeds total " +
                                      std::to_string(total));
    return {diversified, total};
}

/// Parses "m:n" into a validated index.
inline ratio parse_index(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw parse_error("index: expected \"m:n\", got \"" + std::string(text) + "\"");
    long long num = 0, den = 0;
    try {
        num = std::stoll(std::string(text.substr(0, colon)));
        den = std::stoll(std::string(text.substr(colon + 1)));
    } catch (const std::exception&) {
        throw parse_error("index: expected \"m:n\", got \"" + std::string(text) + "\"");
    }
    return diversification_index(num, den);
}

/// Ranked services with variant assignments for the top index.num entries.
struct diversification_plan {
    ratio index;
    std::vector<security_risk> ranked;                // descending score, ties ascending name
    std::map<std::string, std::string> assignments;   // service -> replacement variant
    std::vector<std::string> unchanged;

    bool operator==(const diversification_plan&) const = default;
};

/// Orders services by descending risk and assigns each of the top
/// index.num a variant different from its current one, chosen by seeded
/// draw over the admissible set.
inline diversification_plan plan_diversification(
    std::vector<security_risk> risks, ratio index,
    const std::map<std::string, std::set<std::string>>& variants,
    const std::map<std::string, std::string>& current, std::uint64_t seed) {
    require(index.den == static_cast<long long>(risks.size()),
            "plan_diversification: index denominator " + std::to_string(index.den) +
                " does not match service count " + std::to_string(risks.size()));

    std::stable_sort(risks.begin(), risks.end(), [](const security_risk& a, const security_risk& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.service < b.service;
    });

    diversification_plan plan;
    plan.index = index;
    plan.ranked = risks;

    rng_stream rng(seed);
    for (std::size_t i = 0; i < risks.size(); ++i) {
        const std::string& svc = risks[i].service;
        if (static_cast<long long>(i) >= index.num) {
            plan.unchanged.push_back(svc);
            continue;
        }
        auto vit = variants.find(svc);
        auto cit = current.find(svc);
        if (vit == variants.end() || cit == current.end())
            throw planning_error("plan_diversification: no variant catalog for service \"" + svc + "\"");
        std::vector<std::string> admissible;
        for (const auto& v : vit->second)
            if (v != cit->second) admissible.push_back(v);
        if (admissible.empty())
            throw planning_error("plan_diversification: service \"" + svc +
                                 "\" has no variant other than \"" + cit->second + "\"");
        plan.assignments[svc] = admissible[rng.pick_index(admissible.size())];
    }
    return plan;
}

struct layer_delta {
    long long before = 0;
    long long after = 0;
    std::optional<double> reduction_pct; // 100 * (1 - after/before), only when before > 0

    bool operator==(const layer_delta&) const = default;
};

inline layer_delta make_delta(long long before, long long after) {
    layer_delta d{before, after, std::nullopt};
    if (before > 0)
        d.reduction_pct = 100.0 * (1.0 - static_cast<double>(after) / static_cast<double>(before));
    return d;
}

struct service_reduction {
    std::string service;
    layer_delta application;
    layer_delta image;
    layer_delta combined;

    bool operator==(const service_reduction&) const = default;
};

struct reduction_report {
    std::vector<service_reduction> services; // ascending service name
    layer_delta application_total;
    layer_delta image_total;
    layer_delta combined_total;

    bool operator==(const reduction_report&) const = default;
};

/// Per-service and aggregate attack-surface deltas between two report
/// sets covering the same services.
inline reduction_report evaluate_plan(const std::vector<scan_report>& before,
                                      const std::vector<scan_report>& after) {
    std::map<std::string, const scan_report*> b, a;
    for (const auto& r : before) b[r.service] = &r;
    for (const auto& r : after) a[r.service] = &r;
    if (b.size() != before.size() || a.size() != after.size())
        throw validation_error("evaluate_plan: duplicate service in report set");
    for (const auto& [svc, r] : b) {
        (void)r;
        if (!a.contains(svc)) throw validation_error("evaluate_plan: service \"" + svc + "\" missing from after set");
    }
    for (const auto& [svc, r] : a) {
        (void)r;
        if (!b.contains(svc)) throw validation_error("evaluate_plan: service \"" + svc + "\" missing from before set");
    }

    reduction_report out;
    long long app_b = 0, app_a = 0, img_b = 0, img_a = 0;
    for (const auto& [svc, rb] : b) {
        const scan_report* ra = a.at(svc);
        const long long sab = attack_surface_units(*rb, layer::application);
        const long long saa = attack_surface_units(*ra, layer::application);
        const long long sib = attack_surface_units(*rb, layer::image);
        const long long sia = attack_surface_units(*ra, layer::image);
        out.services.push_back({svc, make_delta(sab, saa), make_delta(sib, sia),
                                make_delta(sab + sib, saa + sia)});
        app_b += sab;
        app_a += saa;
        img_b += sib;
        img_a += sia;
    }
    out.application_total = make_delta(app_b, app_a);
    out.image_total = make_delta(img_b, img_a);
    out.combined_total = make_delta(app_b + img_b, app_a + img_a);
    return out;
}

} // namespace mtdsim
