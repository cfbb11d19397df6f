#pragma once

// Run outputs: per-regeneration timings, compromise/dwell series, replay
// outcomes and counters, with deterministic JSON and CSV emission. Two
// runs of the same scenario and seed produce byte-identical files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtdsim/attacker.hpp"
#include "mtdsim/cluster.hpp"
#include "mtdsim/errors.hpp"

namespace mtdsim {

/// One node replacement: the grow-side start through the shrink-side
/// finish, spanning exactly the provider's published total.
struct regen_timing {
    node_id replaced = 0;
    node_id replacement = 0;
    double start_s = 0.0;
    double end_s = 0.0;

    double duration_s() const { return end_s - start_s; }

    bool operator==(const regen_timing&) const = default;
};

struct replay_outcome {
    double at_s = 0.0;
    std::string script;
    bool success = false;

    bool operator==(const replay_outcome&) const = default;
};

struct variant_switch {
    std::string service;
    std::string from;
    std::string to;
    double at_s = 0.0;

    bool operator==(const variant_switch&) const = default;
};

struct metrics_report {
    std::string scenario;
    std::string provider;
    long long cluster_size = 0;
    std::uint64_t seed = 0;
    std::int64_t horizon_s = 0;

    long long regenerations = 0;
    long long passes = 0;
    std::vector<regen_timing> timings;

    long long sigma_min = 0;
    long long sigma_max = 0;
    long long availability_losses = 0;
    long long containers_rescheduled = 0;

    std::vector<compromise_record> compromises;
    dwell_stats dwell;
    std::vector<replay_outcome> replays;
    std::vector<variant_switch> switches;

    bool operator==(const metrics_report&) const = default;

    void check_consistency() const {
        internal_check(regenerations == static_cast<long long>(timings.size()),
                       "metrics: regeneration count disagrees with timing series");
        internal_check(sigma_min <= sigma_max, "metrics: sigma_min above sigma_max");
        internal_check(dwell == dwell_metrics(compromises),
                       "metrics: dwell stats disagree with compromise series");
        for (const auto& t : timings)
            internal_check(t.end_s >= t.start_s, "metrics: regeneration ends before it starts");
    }
};

inline nlohmann::ordered_json report_to_json(const metrics_report& r) {
    nlohmann::ordered_json doc;
    doc["scenario"] = r.scenario;
    doc["provider"] = r.provider;
    doc["cluster_size"] = r.cluster_size;
    doc["seed"] = r.seed;
    doc["horizon_s"] = r.horizon_s;
    doc["regenerations"] = r.regenerations;
    doc["passes"] = r.passes;
    doc["sigma_min"] = r.sigma_min;
    doc["sigma_max"] = r.sigma_max;
    doc["availability_losses"] = r.availability_losses;
    doc["containers_rescheduled"] = r.containers_rescheduled;

    doc["timings"] = nlohmann::ordered_json::array();
    for (const auto& t : r.timings)
        doc["timings"].push_back({{"replaced", t.replaced},
                                  {"replacement", t.replacement},
                                  {"start_s", t.start_s},
                                  {"end_s", t.end_s}});

    doc["compromises"] = nlohmann::ordered_json::array();
    for (const auto& c : r.compromises) {
        nlohmann::ordered_json rec;
        rec["node"] = c.node;
        rec["start_s"] = seconds_from_ms(c.start);
        if (c.open())
            rec["end_s"] = nullptr;
        else
            rec["end_s"] = seconds_from_ms(c.end);
        rec["cause"] = c.cause;
        doc["compromises"].push_back(std::move(rec));
    }

    doc["dwell"] = {{"total", r.dwell.total},   {"open", r.dwell.open},
                    {"closed", r.dwell.closed}, {"median_s", r.dwell.median_s},
                    {"mean_s", r.dwell.mean_s}, {"min_s", r.dwell.min_s},
                    {"max_s", r.dwell.max_s}};

    doc["replays"] = nlohmann::ordered_json::array();
    for (const auto& p : r.replays)
        doc["replays"].push_back({{"at_s", p.at_s}, {"script", p.script}, {"success", p.success}});

    doc["switches"] = nlohmann::ordered_json::array();
    for (const auto& s : r.switches)
        doc["switches"].push_back(
            {{"service", s.service}, {"from", s.from}, {"to", s.to}, {"at_s", s.at_s}});

    return doc;
}

inline metrics_report report_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw parse_error("metrics report: expected JSON object");
    metrics_report r;
    r.scenario = doc.at("scenario").get<std::string>();
    r.provider = doc.at("provider").get<std::string>();
    r.cluster_size = doc.at("cluster_size").get<long long>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.horizon_s = doc.at("horizon_s").get<std::int64_t>();
    r.regenerations = doc.at("regenerations").get<long long>();
    r.passes = doc.at("passes").get<long long>();
    r.sigma_min = doc.at("sigma_min").get<long long>();
    r.sigma_max = doc.at("sigma_max").get<long long>();
    r.availability_losses = doc.at("availability_losses").get<long long>();
    r.containers_rescheduled = doc.at("containers_rescheduled").get<long long>();
    for (const auto& t : doc.at("timings"))
        r.timings.push_back({t.at("replaced").get<node_id>(), t.at("replacement").get<node_id>(),
                             t.at("start_s").get<double>(), t.at("end_s").get<double>()});
    for (const auto& c : doc.at("compromises")) {
        compromise_record rec;
        rec.node = c.at("node").get<node_id>();
        rec.start = ms_from_seconds(c.at("start_s").get<double>());
        rec.end = c.at("end_s").is_null() ? -1 : ms_from_seconds(c.at("end_s").get<double>());
        rec.cause = c.at("cause").get<std::string>();
        r.compromises.push_back(std::move(rec));
    }
    const auto& d = doc.at("dwell");
    r.dwell = {d.at("total").get<long long>(),  d.at("open").get<long long>(),
               d.at("closed").get<long long>(), d.at("median_s").get<double>(),
               d.at("mean_s").get<double>(),    d.at("min_s").get<double>(),
               d.at("max_s").get<double>()};
    for (const auto& p : doc.at("replays"))
        r.replays.push_back(
            {p.at("at_s").get<double>(), p.at("script").get<std::string>(), p.at("success").get<bool>()});
    for (const auto& s : doc.at("switches"))
        r.switches.push_back({s.at("service").get<std::string>(), s.at("from").get<std::string>(),
                              s.at("to").get<std::string>(), s.at("at_s").get<double>()});
    return r;
}

namespace detail {

// Numbers go through the JSON serializer so CSV and JSON agree digit for
// digit.
inline std::string csv_number(double v) { return nlohmann::json(v).dump(); }

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

/// Flat event/series table: series,label,start_s,end_s,value.
inline std::string report_to_csv(const metrics_report& r) {
    std::ostringstream out;
    out << "series,label,start_s,end_s,value\n";
    auto row = [&out](const std::string& series, const std::string& label, const std::string& start,
                      const std::string& end, const std::string& value) {
        out << series << ',' << detail::csv_field(label) << ',' << start << ',' << end << ','
            << value << '\n';
    };
    row("summary", "cluster_size", "", "", std::to_string(r.cluster_size));
    row("summary", "regenerations", "", "", std::to_string(r.regenerations));
    row("summary", "passes", "", "", std::to_string(r.passes));
    row("summary", "sigma_min", "", "", std::to_string(r.sigma_min));
    row("summary", "sigma_max", "", "", std::to_string(r.sigma_max));
    row("summary", "availability_losses", "", "", std::to_string(r.availability_losses));
    row("summary", "containers_rescheduled", "", "", std::to_string(r.containers_rescheduled));
    for (const auto& t : r.timings)
        row("regeneration", "node" + std::to_string(t.replaced) + ">node" + std::to_string(t.replacement),
            detail::csv_number(t.start_s), detail::csv_number(t.end_s),
            detail::csv_number(t.duration_s()));
    for (const auto& c : r.compromises)
        row("compromise", "node" + std::to_string(c.node) + ":" + c.cause,
            detail::csv_number(seconds_from_ms(c.start)),
            c.open() ? "" : detail::csv_number(seconds_from_ms(c.end)),
            c.open() ? "" : detail::csv_number(seconds_from_ms(c.dwell_ms())));
    row("dwell", "median_s", "", "", detail::csv_number(r.dwell.median_s));
    row("dwell", "mean_s", "", "", detail::csv_number(r.dwell.mean_s));
    row("dwell", "max_s", "", "", detail::csv_number(r.dwell.max_s));
    row("dwell", "open", "", "", std::to_string(r.dwell.open));
    for (const auto& p : r.replays)
        row("replay", p.script, detail::csv_number(p.at_s), "", p.success ? "1" : "0");
    for (const auto& s : r.switches)
        row("switch", s.service + ":" + s.from + ">" + s.to, detail::csv_number(s.at_s), "", "");
    return out.str();
}

enum class output_format { json, csv };

inline output_format parse_output_format(std::string_view s) {
    if (s == "json") return output_format::json;
    if (s == "csv") return output_format::csv;
    throw validation_error("format: expected \"json\" or \"csv\", got \"" + std::string(s) + "\"");
}

inline std::string render_report(const metrics_report& r, output_format fmt) {
    if (fmt == output_format::csv) return report_to_csv(r);
    return report_to_json(r).dump(2) + "\n";
}

inline void emit_report(const metrics_report& r, const std::filesystem::path& path,
                        output_format fmt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write report: " + path.string());
    out << render_report(r, fmt);
    if (!out) throw io_error("short write on report: " + path.string());
}

} // namespace mtdsim
