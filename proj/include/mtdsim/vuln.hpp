#pragma once

// Scan-report model: detected weaknesses per microservice variant, the
// service x vulnerability-class correlation matrix over the horizontal or
// vertical attack surface, and attack-surface unit counting.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtdsim/errors.hpp"

namespace mtdsim {

enum class layer { application, image };
enum class scoring_source { cvss, orrm };

inline std::string to_string(layer l) {
    return l == layer::application ? "application" : "image";
}

inline layer parse_layer(std::string_view s, const std::string& field) {
    if (s == "application") return layer::application;
    if (s == "image") return layer::image;
    throw parse_error(field + ": expected \"application\" or \"image\", got \"" + std::string(s) + "\"");
}

inline std::string to_string(scoring_source s) {
    return s == scoring_source::cvss ? "cvss" : "orrm";
}

inline scoring_source parse_scoring_source(std::string_view s, const std::string& field) {
    if (s == "cvss") return scoring_source::cvss;
    if (s == "orrm") return scoring_source::orrm;
    throw parse_error(field + ": expected \"cvss\" or \"orrm\", got \"" + std::string(s) + "\"");
}

/// One detected weakness. `id` is opaque scanner metadata; correlation and
/// scoring key on the weakness class (CWE id).
struct vulnerability {
    std::string id;
    int cwe_id = 0;
    mtdsim::layer layer = layer::application;
    double severity = 0.0; // [0, 10]
    scoring_source source = scoring_source::cvss;

    bool operator==(const vulnerability&) const = default;
};

struct finding {
    vulnerability vuln;
    long long count = 0;

    bool operator==(const finding&) const = default;
};

/// All findings for one (service, variant). (layer, cwe_id) uniquely keys
/// an entry; counts aggregate individual instances of that class.
struct scan_report {
    std::string service;
    std::string variant;
    std::vector<finding> findings;

    bool operator==(const scan_report&) const = default;

    long long total_findings() const {
        long long n = 0;
        for (const auto& f : findings) n += f.count;
        return n;
    }

    const finding* find(mtdsim::layer l, int cwe) const {
        for (const auto& f : findings)
            if (f.vuln.layer == l && f.vuln.cwe_id == cwe) return &f;
        return nullptr;
    }
};

namespace detail {

inline const nlohmann::json& member(const nlohmann::json& obj, const char* key,
                                    const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end()) throw parse_error(ctx + ": missing field \"" + key + "\"");
    return *it;
}

inline std::string as_string(const nlohmann::json& v, const std::string& field) {
    if (!v.is_string()) throw parse_error(field + ": expected string");
    return v.get<std::string>();
}

inline long long as_int(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number_integer()) throw parse_error(field + ": expected integer");
    return v.get<long long>();
}

inline double as_number(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number()) throw parse_error(field + ": expected number");
    return v.get<double>();
}

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> known,
                                const std::string& ctx) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) { ok = true; break; }
        if (!ok) throw parse_error(ctx + ": unknown field \"" + key + "\"");
    }
}

} // namespace detail

/// Parses and validates one scan-report document:
///   { "service": str, "variant": str, "findings":
///       [ { "id": str, "cwe": int, "layer": "application"|"image",
///           "severity": num, "scoring_source": "cvss"|"orrm", "count": int } ] }
inline scan_report parse_scan_report(const nlohmann::json& doc) {
    if (!doc.is_object()) throw parse_error("scan report: expected JSON object");
    detail::reject_unknown_keys(doc, {"service", "variant", "findings", "comment"}, "scan report");

    scan_report r;
    r.service = detail::as_string(detail::member(doc, "service", "scan report"), "service");
    r.variant = detail::as_string(detail::member(doc, "variant", "scan report"), "variant");
    if (r.service.empty()) throw parse_error("service: must be non-empty");

    const auto& findings = detail::member(doc, "findings", "scan report");
    if (!findings.is_array()) throw parse_error("findings: expected array");

    std::set<std::pair<int, int>> seen; // (layer, cwe)
    std::size_t i = 0;
    for (const auto& e : findings) {
        const std::string ctx = "findings[" + std::to_string(i) + "]";
        if (!e.is_object()) throw parse_error(ctx + ": expected object");
        detail::reject_unknown_keys(e, {"id", "cwe", "layer", "severity", "scoring_source", "count"}, ctx);

        finding f;
        f.vuln.id = detail::as_string(detail::member(e, "id", ctx), ctx + ".id");
        f.vuln.cwe_id = static_cast<int>(detail::as_int(detail::member(e, "cwe", ctx), ctx + ".cwe"));
        f.vuln.layer = parse_layer(detail::as_string(detail::member(e, "layer", ctx), ctx + ".layer"), ctx + ".layer");
        f.vuln.severity = detail::as_number(detail::member(e, "severity", ctx), ctx + ".severity");
        f.vuln.source = parse_scoring_source(
            detail::as_string(detail::member(e, "scoring_source", ctx), ctx + ".scoring_source"),
            ctx + ".scoring_source");
        f.count = detail::as_int(detail::member(e, "count", ctx), ctx + ".count");

        if (f.vuln.cwe_id <= 0)
            throw validation_error(ctx + ".cwe: must be > 0, got " + std::to_string(f.vuln.cwe_id));
        if (f.vuln.severity < 0.0 || f.vuln.severity > 10.0)
            throw validation_error(ctx + ".severity: must be in [0, 10]");
        if (f.count < 0)
            throw validation_error(ctx + ".count: must be >= 0, got " + std::to_string(f.count));
        if (!seen.insert({static_cast<int>(f.vuln.layer), f.vuln.cwe_id}).second)
            throw parse_error(ctx + ": duplicate entry for CWE-" + std::to_string(f.vuln.cwe_id) +
                              " at layer " + to_string(f.vuln.layer));
        r.findings.push_back(std::move(f));
        ++i;
    }
    return r;
}

inline scan_report parse_scan_report(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("scan report: invalid JSON: ") + e.what());
    }
    return parse_scan_report(doc);
}

inline scan_report load_scan_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open scan report: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_scan_report(std::string_view(ss.str()));
    } catch (const parse_error& e) {
        throw parse_error(path.string() + ": " + e.what());
    } catch (const validation_error& e) {
        throw validation_error(path.string() + ": " + e.what());
    }
}

enum class matrix_scope { horizontal, vertical };

inline std::string to_string(matrix_scope s) {
    return s == matrix_scope::horizontal ? "horizontal" : "vertical";
}

inline matrix_scope parse_matrix_scope(std::string_view s) {
    if (s == "horizontal") return matrix_scope::horizontal;
    if (s == "vertical") return matrix_scope::vertical;
    throw parse_error("scope: expected \"horizontal\" or \"vertical\", got \"" + std::string(s) + "\"");
}

/// Binary service x vulnerability-class matrix. Rows follow input report
/// order, columns are ascending CWE id.
struct correlation_matrix {
    std::vector<std::string> services;
    std::vector<int> vuln_keys;
    std::vector<std::vector<int>> rows; // entries in {0, 1}
    matrix_scope scope = matrix_scope::horizontal;

    bool operator==(const correlation_matrix&) const = default;

    int at(std::size_t i, std::size_t j) const { return rows.at(i).at(j); }
};

/// Horizontal scope: only application-layer findings participate.
/// Vertical scope: a class participates iff it has an application-layer
/// finding somewhere and an image-layer finding somewhere; a service is
/// marked present if it carries the class at either layer.
inline correlation_matrix build_correlation_matrix(const std::vector<scan_report>& reports,
                                                   matrix_scope scope) {
    require(!reports.empty(), "build_correlation_matrix: need at least one report");

    std::set<int> app_classes, image_classes;
    for (const auto& r : reports)
        for (const auto& f : r.findings) {
            if (f.count < 1) continue; // zero-count entries carry no presence
            (f.vuln.layer == layer::application ? app_classes : image_classes).insert(f.vuln.cwe_id);
        }

    std::set<int> columns;
    if (scope == matrix_scope::horizontal) {
        columns = app_classes;
    } else {
        std::set_intersection(app_classes.begin(), app_classes.end(),
                              image_classes.begin(), image_classes.end(),
                              std::inserter(columns, columns.begin()));
    }

    correlation_matrix m;
    m.scope = scope;
    m.vuln_keys.assign(columns.begin(), columns.end());
    for (const auto& r : reports) {
        m.services.push_back(r.service);
        std::vector<int> row(m.vuln_keys.size(), 0);
        for (const auto& f : r.findings) {
            if (f.count < 1) continue;
            if (scope == matrix_scope::horizontal && f.vuln.layer != layer::application) continue;
            auto it = std::lower_bound(m.vuln_keys.begin(), m.vuln_keys.end(), f.vuln.cwe_id);
            if (it != m.vuln_keys.end() && *it == f.vuln.cwe_id)
                row[static_cast<std::size_t>(it - m.vuln_keys.begin())] = 1;
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

/// Serializes as { services, vuln_keys, rows }.
inline nlohmann::ordered_json matrix_to_json(const correlation_matrix& m) {
    nlohmann::ordered_json j;
    j["services"] = m.services;
    j["vuln_keys"] = m.vuln_keys;
    j["rows"] = m.rows;
    return j;
}

struct correlated_pair {
    std::string first;
    std::string second;
    std::vector<int> shared; // ascending cwe ids

    bool operator==(const correlated_pair&) const = default;
};

/// Every unordered service pair sharing at least one marked class, in row
/// order, with the full shared class set.
inline std::vector<correlated_pair> correlated_pairs(const correlation_matrix& m) {
    std::vector<correlated_pair> out;
    for (std::size_t i = 0; i < m.services.size(); ++i) {
        for (std::size_t j = i + 1; j < m.services.size(); ++j) {
            std::vector<int> shared;
            for (std::size_t k = 0; k < m.vuln_keys.size(); ++k)
                if (m.rows[i][k] == 1 && m.rows[j][k] == 1) shared.push_back(m.vuln_keys[k]);
            if (!shared.empty())
                out.push_back({m.services[i], m.services[j], std::move(shared)});
        }
    }
    return out;
}

/// Standard Pearson coefficient. Zero variance on either side is an error
/// rather than a silent 0.
inline double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "pearson_correlation: vectors must have equal length");
    require(a.size() >= 2, "pearson_correlation: need at least two components");

    const double n = static_cast<double>(a.size());
    double mean_a = 0, mean_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;

    double cov = 0, var_a = 0, var_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0) throw undefined_correlation("pearson_correlation: first vector has zero variance");
    if (var_b == 0.0) throw undefined_correlation("pearson_correlation: second vector has zero variance");
    return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

enum class vector_weighting { presence, counts };

/// Encodes one service's findings at a layer over the given class columns,
/// either as binary presence (default) or as raw counts.
inline std::vector<double> service_vector(const scan_report& r, std::span<const int> cwe_columns,
                                          layer which,
                                          vector_weighting w = vector_weighting::presence) {
    std::vector<double> v(cwe_columns.size(), 0.0);
    for (std::size_t i = 0; i < cwe_columns.size(); ++i) {
        const finding* f = r.find(which, cwe_columns[i]);
        if (f == nullptr || f->count < 1) continue;
        v[i] = w == vector_weighting::presence ? 1.0 : static_cast<double>(f->count);
    }
    return v;
}

/// Each detected vulnerability counts as one attack-surface unit.
inline long long attack_surface_units(const scan_report& r, layer which) {
    long long units = 0;
    for (const auto& f : r.findings)
        if (f.vuln.layer == which) units += f.count;
    return units;
}

} // namespace mtdsim
