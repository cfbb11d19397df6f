#pragma once

// Attacker side of the simulation: scripted attacks replayed against the
// currently deployed service variants, node compromise bookkeeping and
// dwell-time statistics.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtdsim/cluster.hpp"
#include "mtdsim/errors.hpp"
#include "mtdsim/vuln.hpp"

namespace mtdsim {

/// One precondition of a scripted attack: the named service must expose
/// the weakness class at the given layer.
struct attack_step {
    std::string service;
    int cwe_id = 0;
    mtdsim::layer layer = layer::application;

    bool operator==(const attack_step&) const = default;
};

/// A canned exploit chain. Horizontal scripts move across services on the
/// application layer only; vertical scripts chain through the image layer,
/// so they need at least one step on each layer.
struct attacker_script {
    std::string name;
    matrix_scope scope = matrix_scope::horizontal;
    std::vector<attack_step> steps;

    bool operator==(const attacker_script&) const = default;

    void validate() const {
        require(!name.empty(), "attacker script: name must not be empty");
        require(!steps.empty(), "attacker script \"" + name + "\": needs at least one step");
        bool has_app = false, has_image = false;
        for (const auto& s : steps) {
            require(s.cwe_id > 0, "attacker script \"" + name + "\": cwe_id must be > 0");
            require(!s.service.empty(), "attacker script \"" + name + "\": step without service");
            (s.layer == layer::application ? has_app : has_image) = true;
        }
        if (scope == matrix_scope::horizontal)
            require(!has_image,
                    "attacker script \"" + name + "\": horizontal scripts are application-layer only");
        else
            require(has_app && has_image,
                    "attacker script \"" + name + "\": vertical scripts must touch both layers");
    }
};

inline attacker_script parse_attacker_script(const nlohmann::json& doc) {
    if (!doc.is_object()) throw parse_error("attacker script: expected JSON object");
    detail::reject_unknown_keys(doc, {"name", "scope", "steps", "comment"}, "attacker script");
    attacker_script script;
    script.name = detail::as_string(detail::member(doc, "name", "attacker script"), "name");
    script.scope =
        parse_matrix_scope(detail::as_string(detail::member(doc, "scope", "attacker script"), "scope"));
    const auto& steps = detail::member(doc, "steps", "attacker script");
    if (!steps.is_array()) throw parse_error("attacker script \"" + script.name + "\": steps must be an array");
    for (const auto& s : steps) {
        if (!s.is_object()) throw parse_error("attacker script step: expected JSON object");
        detail::reject_unknown_keys(s, {"service", "cwe_id", "layer"}, "attacker script step");
        attack_step step;
        step.service = detail::as_string(detail::member(s, "service", "attack step"), "service");
        step.cwe_id = static_cast<int>(detail::as_int(detail::member(s, "cwe_id", "attack step"), "cwe_id"));
        step.layer = parse_layer(detail::as_string(detail::member(s, "layer", "attack step"), "layer"),
                                 "attack step layer");
        script.steps.push_back(std::move(step));
    }
    script.validate();
    return script;
}

struct replay_result {
    bool success = true;
    std::optional<attack_step> blocked_at; // first failing precondition

    bool operator==(const replay_result&) const = default;
};

/// Replays a script against the deployed variants. Every step must find
/// its weakness class present (count >= 1) in the service's current scan
/// report; the first missing one blocks the chain.
inline replay_result replay_script(const attacker_script& script,
                                   const std::map<std::string, scan_report>& deployed) {
    script.validate();
    replay_result res;
    for (const auto& step : script.steps) {
        auto it = deployed.find(step.service);
        require(it != deployed.end(),
                "replay: script \"" + script.name + "\" targets unknown service \"" + step.service + "\"");
        const finding* f = it->second.find(step.layer, step.cwe_id);
        if (f == nullptr || f->count < 1) {
            res.success = false;
            res.blocked_at = step;
            return res;
        }
    }
    return res;
}

/// One successful foothold on a node. Open until the node is regenerated
/// away (or the baseline detection window expires).
struct compromise_record {
    node_id node = 0;
    sim_ms start = 0;
    sim_ms end = -1; // -1 while open
    std::string cause;

    bool open() const { return end < 0; }
    sim_ms dwell_ms() const {
        internal_check(!open(), "dwell_ms on an open compromise record");
        return end - start;
    }

    bool operator==(const compromise_record&) const = default;
};

/// Marks a node compromised and opens a dwell record. Only active nodes
/// can be hit; re-compromising an already-owned node is a no-op.
inline bool inject_compromise(cluster_state& state, std::vector<compromise_record>& records,
                              node_id id, sim_ms at, const std::string& cause) {
    node* n = state.find(id);
    if (n == nullptr || n->phase != node_phase::active) return false;
    if (n->compromised) return false;
    n->compromised = true;
    compromise_record rec;
    rec.node = id;
    rec.start = at;
    rec.cause = cause;
    records.push_back(std::move(rec));
    return true;
}

/// Closes every open record for the node; regeneration evicts the attacker.
inline int close_dwell_on_termination(std::vector<compromise_record>& records, node_id id, sim_ms at) {
    int closed = 0;
    for (auto& rec : records) {
        if (rec.node != id || !rec.open()) continue;
        internal_check(at >= rec.start, "compromise record closing before it opened");
        rec.end = at;
        ++closed;
    }
    return closed;
}

struct dwell_stats {
    long long total = 0;
    long long open = 0;
    long long closed = 0;
    double median_s = 0.0; // lower middle for even counts
    double mean_s = 0.0;
    double min_s = 0.0;
    double max_s = 0.0;

    bool operator==(const dwell_stats&) const = default;
};

/// Statistics over closed dwell intervals. Median uses the lower middle
/// element so it is always an observed value.
inline dwell_stats dwell_metrics(const std::vector<compromise_record>& records) {
    dwell_stats st;
    st.total = static_cast<long long>(records.size());
    std::vector<double> dwells;
    for (const auto& rec : records) {
        if (rec.open()) {
            ++st.open;
            continue;
        }
        ++st.closed;
        dwells.push_back(seconds_from_ms(rec.dwell_ms()));
    }
    if (dwells.empty()) return st;
    std::sort(dwells.begin(), dwells.end());
    st.median_s = dwells[(dwells.size() - 1) / 2];
    st.min_s = dwells.front();
    st.max_s = dwells.back();
    double sum = 0.0;
    for (double d : dwells) sum += d;
    st.mean_s = sum / static_cast<double>(dwells.size());
    return st;
}

/// Industry-report figure for median attacker dwell before detection:
/// 99 days, used when nothing else evicts the attacker.
inline constexpr std::int64_t default_baseline_detection_s = 99LL * 24 * 3600;

} // namespace mtdsim
