#pragma once

// Scenario files wire together a provider, a cluster, a regeneration
// policy and an attacker into one reproducible run. All referenced scan
// reports are loaded and cross-checked eagerly so a bad scenario fails at
// load time, not mid-simulation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtdsim/attacker.hpp"
#include "mtdsim/cluster.hpp"
#include "mtdsim/errors.hpp"
#include "mtdsim/risk.hpp"
#include "mtdsim/vuln.hpp"

namespace mtdsim {

/// Per-service software variants. `current` names the variant deployed at
/// t=0; `reports` holds one scan report per available variant.
struct service_fixture {
    std::string current;
    std::map<std::string, scan_report> reports;

    bool operator==(const service_fixture&) const = default;
};

enum class diversify_trigger { scheduled, manual };

inline diversify_trigger parse_diversify_trigger(std::string_view s) {
    if (s == "scheduled") return diversify_trigger::scheduled;
    if (s == "manual") return diversify_trigger::manual;
    throw parse_error("diversify.trigger: expected \"scheduled\" or \"manual\", got \"" + std::string(s) + "\"");
}

inline std::string to_string(diversify_trigger t) {
    return t == diversify_trigger::scheduled ? "scheduled" : "manual";
}

/// Software-diversification settings. With a scheduled trigger the plan
/// is computed and applied once, period_s into the run; manual keeps the
/// plan available to tooling without the simulation applying it.
struct diversify_config {
    ratio index{0, 1};
    diversify_trigger trigger = diversify_trigger::scheduled;
    std::int64_t period_s = 0;

    bool operator==(const diversify_config&) const = default;
};

struct attacker_config {
    std::optional<std::int64_t> interarrival_s; // mean of the exponential arrival gap
    std::int64_t baseline_detection_s = default_baseline_detection_s;
    std::optional<std::int64_t> replay_period_s; // cadence for scripted replays
    std::vector<attacker_script> scripts;
    std::vector<std::int64_t> injections_s; // explicit compromise times

    bool operator==(const attacker_config&) const = default;
};

struct scenario {
    std::string name;
    provider_profile provider;
    long long cluster_size = 1;
    std::optional<regeneration_policy> regeneration;
    std::optional<diversify_config> diversify;
    std::optional<attacker_config> attacker;
    std::map<std::string, service_fixture> services;
    long long shrinkage_min_count = 5;
    std::uint64_t seed = 0;
    std::int64_t horizon_s = 0;

    /// Scan reports of the variants deployed right now.
    std::map<std::string, scan_report> deployed_reports() const {
        std::map<std::string, scan_report> out;
        for (const auto& [name_, fx] : services) out.emplace(name_, fx.reports.at(fx.current));
        return out;
    }

    std::vector<std::string> variants_of(const std::string& service) const {
        auto it = services.find(service);
        require(it != services.end(), "unknown service \"" + service + "\"");
        std::vector<std::string> names;
        for (const auto& [variant, rep] : it->second.reports) {
            (void)rep;
            names.push_back(variant);
        }
        return names;
    }

    void validate() const {
        provider.validate();
        require(cluster_size >= 1, "scenario \"" + name + "\": cluster_size must be >= 1");
        require(horizon_s > 0, "scenario \"" + name + "\": horizon_s must be > 0");
        require(shrinkage_min_count >= 0,
                "scenario \"" + name + "\": shrinkage_min_count must be >= 0");
        if (regeneration)
            require(regeneration->cadence_s >= 0,
                    "scenario \"" + name + "\": regeneration cadence must be >= 0");
        for (const auto& [sname, fx] : services) {
            require(!fx.reports.empty(), "service \"" + sname + "\": needs at least one variant");
            require(fx.reports.contains(fx.current),
                    "service \"" + sname + "\": current variant \"" + fx.current + "\" has no report");
        }
        if (diversify) {
            require(diversify->period_s >= 0, "diversify.period_s must be >= 0");
            require(!services.empty(), "diversify requires service fixtures");
            require(diversify->index.den == static_cast<long long>(services.size()),
                    "diversify index denominator must equal the service count (" +
                        std::to_string(services.size()) + ")");
        }
        if (attacker) {
            if (attacker->interarrival_s)
                require(*attacker->interarrival_s > 0, "attacker.interarrival_s must be > 0");
            require(attacker->baseline_detection_s > 0, "attacker.baseline_detection_s must be > 0");
            if (attacker->replay_period_s) {
                require(*attacker->replay_period_s > 0, "attacker.replay_period_s must be > 0");
                require(!attacker->scripts.empty(),
                        "attacker.replay_period_s set but no scripts to replay");
            }
            for (const auto& script : attacker->scripts) {
                script.validate();
                for (const auto& step : script.steps)
                    require(services.contains(step.service),
                            "script \"" + script.name + "\" targets unknown service \"" +
                                step.service + "\"");
            }
            for (auto t : attacker->injections_s)
                require(t >= 0, "attacker.injections_s entries must be >= 0");
        }
    }
};

namespace detail {

inline scan_report load_fixture_report(const std::filesystem::path& base,
                                       const std::string& service, const std::string& variant,
                                       const std::string& rel) {
    const std::filesystem::path path =
        std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel) : base / rel;
    scan_report rep = load_scan_report(path);
    require(rep.service == service, path.string() + ": report is for service \"" + rep.service +
                                        "\", fixture entry says \"" + service + "\"");
    require(rep.variant == variant, path.string() + ": report is for variant \"" + rep.variant +
                                        "\", fixture entry says \"" + variant + "\"");
    return rep;
}

} // namespace detail

/// Parses a scenario document. Relative fixture and provider paths are
/// resolved against `base_dir`.
inline scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw parse_error("scenario: expected JSON object");
    detail::reject_unknown_keys(doc,
                                {"name", "provider", "cluster_size", "regeneration", "diversify",
                                 "attacker", "fixtures", "shrinkage_min_count", "seed", "horizon_s",
                                 "comment"},
                                "scenario");
    scenario sc;
    sc.name = detail::as_string(detail::member(doc, "name", "scenario"), "name");

    const std::string prov = detail::as_string(detail::member(doc, "provider", "scenario"), "provider");
    if (prov.find('/') != std::string::npos || prov.ends_with(".json")) {
        const std::filesystem::path p =
            std::filesystem::path(prov).is_absolute() ? std::filesystem::path(prov) : base_dir / prov;
        sc.provider = load_provider_profile(p);
    } else {
        auto builtin = find_builtin_provider(prov == "os" ? "openstack" : prov);
        if (!builtin) {
            std::string known;
            for (const auto& p : builtin_providers()) known += (known.empty() ? "" : ", ") + p.name;
            throw validation_error("provider: unknown name \"" + prov + "\" (built in: " + known + ")");
        }
        sc.provider = *builtin;
    }

    sc.cluster_size = detail::as_int(detail::member(doc, "cluster_size", "scenario"), "cluster_size");
    sc.horizon_s = detail::as_int(detail::member(doc, "horizon_s", "scenario"), "horizon_s");
    if (doc.contains("seed"))
        sc.seed = static_cast<std::uint64_t>(detail::as_int(doc.at("seed"), "seed"));
    if (doc.contains("shrinkage_min_count"))
        sc.shrinkage_min_count = detail::as_int(doc.at("shrinkage_min_count"), "shrinkage_min_count");

    if (doc.contains("regeneration")) {
        const auto& r = doc.at("regeneration");
        if (!r.is_object()) throw parse_error("regeneration: expected JSON object");
        detail::reject_unknown_keys(r, {"strategy", "cadence_s", "victims"}, "regeneration");
        regeneration_policy pol;
        pol.strategy = parse_regen_strategy(
            detail::as_string(detail::member(r, "strategy", "regeneration"), "strategy"),
            "regeneration.strategy");
        pol.cadence_s = detail::as_int(detail::member(r, "cadence_s", "regeneration"), "cadence_s");
        if (r.contains("victims")) {
            const std::string v = detail::as_string(r.at("victims"), "victims");
            if (v == "seeded_random")
                pol.victims = victim_policy::seeded_random;
            else if (v == "round_robin")
                pol.victims = victim_policy::round_robin;
            else
                throw parse_error("regeneration.victims: expected \"seeded_random\" or \"round_robin\"");
        }
        sc.regeneration = pol;
    }

    if (doc.contains("diversify")) {
        const auto& d = doc.at("diversify");
        if (!d.is_object()) throw parse_error("diversify: expected JSON object");
        detail::reject_unknown_keys(d, {"index", "trigger", "period_s"}, "diversify");
        diversify_config cfg;
        cfg.index = parse_index(detail::as_string(detail::member(d, "index", "diversify"), "index"));
        if (d.contains("trigger"))
            cfg.trigger = parse_diversify_trigger(detail::as_string(d.at("trigger"), "trigger"));
        if (d.contains("period_s")) cfg.period_s = detail::as_int(d.at("period_s"), "period_s");
        sc.diversify = cfg;
    }

    if (doc.contains("attacker")) {
        const auto& a = doc.at("attacker");
        if (!a.is_object()) throw parse_error("attacker: expected JSON object");
        detail::reject_unknown_keys(
            a, {"interarrival_s", "baseline_detection_s", "replay_period_s", "scripts", "injections_s"},
            "attacker");
        attacker_config cfg;
        if (a.contains("interarrival_s"))
            cfg.interarrival_s = detail::as_int(a.at("interarrival_s"), "interarrival_s");
        if (a.contains("baseline_detection_s"))
            cfg.baseline_detection_s = detail::as_int(a.at("baseline_detection_s"), "baseline_detection_s");
        if (a.contains("replay_period_s"))
            cfg.replay_period_s = detail::as_int(a.at("replay_period_s"), "replay_period_s");
        if (a.contains("scripts")) {
            const auto& scripts = a.at("scripts");
            if (!scripts.is_array()) throw parse_error("attacker.scripts: expected JSON array");
            for (const auto& s : scripts) cfg.scripts.push_back(parse_attacker_script(s));
        }
        if (a.contains("injections_s")) {
            const auto& inj = a.at("injections_s");
            if (!inj.is_array()) throw parse_error("attacker.injections_s: expected JSON array");
            for (const auto& t : inj) cfg.injections_s.push_back(detail::as_int(t, "injections_s"));
        }
        sc.attacker = cfg;
    }

    if (doc.contains("fixtures")) {
        const auto& fixtures = doc.at("fixtures");
        if (!fixtures.is_object()) throw parse_error("fixtures: expected JSON object");
        for (const auto& [sname, entry] : fixtures.items()) {
            if (!entry.is_object()) throw parse_error("fixtures." + sname + ": expected JSON object");
            detail::reject_unknown_keys(entry, {"current", "reports"}, "fixtures." + sname);
            service_fixture fx;
            fx.current = detail::as_string(detail::member(entry, "current", "fixtures." + sname), "current");
            const auto& reports = detail::member(entry, "reports", "fixtures." + sname);
            if (!reports.is_object())
                throw parse_error("fixtures." + sname + ".reports: expected JSON object");
            for (const auto& [variant, rel] : reports.items())
                fx.reports.emplace(variant, detail::load_fixture_report(
                                                base_dir, sname, variant,
                                                detail::as_string(rel, "fixtures." + sname + ".reports")));
            sc.services.emplace(sname, std::move(fx));
        }
    }

    sc.validate();
    return sc;
}

inline scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open scenario: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path.string() + ": invalid JSON: " + std::string(e.what()));
    }
    try {
        return parse_scenario(doc, path.parent_path());
    } catch (const parse_error& e) {
        throw parse_error(path.string() + ": " + e.what());
    } catch (const validation_error& e) {
        throw validation_error(path.string() + ": " + e.what());
    }
}

} // namespace mtdsim
