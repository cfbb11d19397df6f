#pragma once

// Elastic-platform runtime model: intended-vs-current size reconciliation,
// the node lifecycle pipeline with per-provider phase durations, rolling /
// doubling regeneration plans and container rescheduling.
//
// Timing model: one full node regeneration is create -> secgroup -> join
// (grow) followed by drain+terminate -> secgroup (shrink). The shrink-side
// secgroup adjustment absorbs the calibration residual
// published_total_s - (creation + secgroup + join + terminate), so the
// end-to-end span of a regeneration equals the provider's published total
// exactly. The simulation clock is integer milliseconds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
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

using sim_ms = std::int64_t;

inline sim_ms ms_from_seconds(double s) { return static_cast<sim_ms>(std::llround(s * 1000.0)); }
inline double seconds_from_ms(sim_ms ms) { return static_cast<double>(ms) / 1000.0; }

/// Median phase durations for one IaaS provider, in seconds.
struct provider_profile {
    std::string name;
    std::int64_t creation_s = 0;
    std::int64_t secgroup_s = 0;
    std::int64_t join_s = 0;
    std::int64_t terminate_s = 0;
    std::int64_t published_total_s = 0;

    bool operator==(const provider_profile&) const = default;

    void validate() const {
        require(creation_s >= 0 && secgroup_s >= 0 && join_s >= 0 && terminate_s >= 0 &&
                    published_total_s >= 0,
                "provider profile \"" + name + "\": durations must be >= 0");
        const std::int64_t longest =
            std::max({creation_s, secgroup_s, join_s, terminate_s});
        require(published_total_s >= longest,
                "provider profile \"" + name + "\": published_total_s below longest phase");
    }

    /// Duration of the shrink-side secgroup adjustment; carries the
    /// calibration residual so a full regeneration spans published_total_s.
    std::int64_t shrink_residual_s() const {
        const std::int64_t components = creation_s + secgroup_s + join_s + terminate_s;
        return std::max<std::int64_t>(0, published_total_s - components);
    }
};

inline provider_profile parse_provider_profile(const nlohmann::json& doc) {
    if (!doc.is_object()) throw parse_error("provider profile: expected JSON object");
    detail::reject_unknown_keys(
        doc, {"name", "creation_s", "secgroup_s", "join_s", "terminate_s", "published_total_s", "comment"},
        "provider profile");
    provider_profile p;
    p.name = detail::as_string(detail::member(doc, "name", "provider profile"), "name");
    p.creation_s = detail::as_int(detail::member(doc, "creation_s", "provider profile"), "creation_s");
    p.secgroup_s = detail::as_int(detail::member(doc, "secgroup_s", "provider profile"), "secgroup_s");
    p.join_s = detail::as_int(detail::member(doc, "join_s", "provider profile"), "join_s");
    p.terminate_s = detail::as_int(detail::member(doc, "terminate_s", "provider profile"), "terminate_s");
    p.published_total_s =
        detail::as_int(detail::member(doc, "published_total_s", "provider profile"), "published_total_s");
    p.validate();
    return p;
}

inline provider_profile load_provider_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open provider profile: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path.string() + ": invalid JSON: " + std::string(e.what()));
    }
    return parse_provider_profile(doc);
}

/// Measured medians for the four evaluated infrastructures.
inline const std::vector<provider_profile>& builtin_providers() {
    static const std::vector<provider_profile> providers = {
        {"aws", 70, 1, 7, 2, 81},
        {"gce", 100, 8, 9, 50, 175},
        {"azure", 380, 17, 7, 180, 600},
        {"openstack", 110, 2, 7, 5, 126},
    };
    return providers;
}

inline std::optional<provider_profile> find_builtin_provider(std::string_view name) {
    for (const auto& p : builtin_providers())
        if (p.name == name) return p;
    return std::nullopt;
}

enum class node_phase { creating, joining, active, draining, terminating, gone };

inline std::string to_string(node_phase p) {
    switch (p) {
        case node_phase::creating: return "creating";
        case node_phase::joining: return "joining";
        case node_phase::active: return "active";
        case node_phase::draining: return "draining";
        case node_phase::terminating: return "terminating";
        case node_phase::gone: return "gone";
    }
    return "?";
}

using node_id = std::uint64_t;

struct node {
    node_id id = 0;
    node_phase phase = node_phase::creating;
    bool compromised = false;
    sim_ms created_at = 0;
    sim_ms activated_at = -1;
    std::set<std::string> containers;

    bool operator==(const node&) const = default;
};

/// Phases advance strictly along creating -> joining -> active -> draining
/// -> terminating -> gone. Anything else is a simulator bug.
inline void advance_phase(node& n, node_phase to) {
    internal_check(static_cast<int>(to) == static_cast<int>(n.phase) + 1,
                   "illegal phase transition " + to_string(n.phase) + " -> " + to_string(to) +
                       " on node " + std::to_string(n.id));
    n.phase = to;
}

struct cluster_state {
    long long intended_size = 0; // rho
    std::map<node_id, node> nodes;
    std::set<node_id> secgroup;
    std::set<std::string> unscheduled; // containers parked while no active node exists
    node_id next_id = 1;

    long long current_size() const { // sigma
        long long n = 0;
        for (const auto& [id, nd] : nodes) {
            (void)id;
            if (nd.phase == node_phase::active) ++n;
        }
        return n;
    }

    std::vector<node_id> active_ids() const {
        std::vector<node_id> ids;
        for (const auto& [id, nd] : nodes)
            if (nd.phase == node_phase::active) ids.push_back(id);
        return ids;
    }

    node* find(node_id id) {
        auto it = nodes.find(id);
        return it == nodes.end() ? nullptr : &it->second;
    }

    const node* find(node_id id) const {
        auto it = nodes.find(id);
        return it == nodes.end() ? nullptr : &it->second;
    }

    node_id spawn(sim_ms now) {
        const node_id id = next_id++;
        node n;
        n.id = id;
        n.phase = node_phase::creating;
        n.created_at = now;
        nodes.emplace(id, std::move(n));
        return id;
    }

    long long container_count() const {
        long long n = static_cast<long long>(unscheduled.size());
        for (const auto& [id, nd] : nodes) {
            (void)id;
            n += static_cast<long long>(nd.containers.size());
        }
        return n;
    }

    void check_invariants() const {
        for (const auto& [id, nd] : nodes) {
            internal_check(nd.id == id, "node id mismatch in cluster map");
            if (nd.phase == node_phase::active)
                internal_check(secgroup.contains(id),
                               "active node " + std::to_string(id) + " missing from secgroup");
            if (nd.compromised)
                internal_check(nd.phase == node_phase::active || nd.phase == node_phase::draining,
                               "compromised node " + std::to_string(id) + " in phase " +
                                   to_string(nd.phase));
        }
    }
};

/// Seeds a cluster of `size` active nodes, all admitted to the secgroup.
inline cluster_state make_cluster(long long size) {
    require(size >= 1, "cluster size must be >= 1");
    cluster_state st;
    st.intended_size = size;
    for (long long i = 0; i < size; ++i) {
        const node_id id = st.spawn(0);
        node& n = st.nodes.at(id);
        n.phase = node_phase::active;
        n.activated_at = 0;
        st.secgroup.insert(id);
    }
    return st;
}

enum class regen_strategy { rolling_one, doubling, nstep_rolling };

inline std::string to_string(regen_strategy s) {
    switch (s) {
        case regen_strategy::rolling_one: return "rolling_one";
        case regen_strategy::doubling: return "doubling";
        case regen_strategy::nstep_rolling: return "nstep_rolling";
    }
    return "?";
}

inline regen_strategy parse_regen_strategy(std::string_view s, const std::string& field) {
    if (s == "rolling_one") return regen_strategy::rolling_one;
    if (s == "doubling") return regen_strategy::doubling;
    if (s == "nstep_rolling") return regen_strategy::nstep_rolling;
    throw parse_error(field + ": unknown strategy \"" + std::string(s) + "\"");
}

/// Random victims cycle the fleet unpredictably; round_robin (oldest
/// first) is easier for an attacker to anticipate but useful for
/// comparison runs.
enum class victim_policy { seeded_random, round_robin };

struct regeneration_policy {
    regen_strategy strategy = regen_strategy::rolling_one;
    std::int64_t cadence_s = 0; // gap between regeneration rounds, 0 = back-to-back
    victim_policy victims = victim_policy::seeded_random;

    bool operator==(const regeneration_policy&) const = default;
};

/// Sequence of intended-size targets realizing one regeneration round
/// (rolling_one, doubling) or one full pass (nstep_rolling).
inline std::vector<long long> plan_regeneration(const regeneration_policy& policy, long long n) {
    require(n >= 1, "plan_regeneration: cluster size must be >= 1");
    require(policy.cadence_s >= 0, "plan_regeneration: cadence must be >= 0");
    switch (policy.strategy) {
        case regen_strategy::rolling_one:
            return {n + 1, n};
        case regen_strategy::doubling:
            return {2 * n, n};
        case regen_strategy::nstep_rolling: {
            std::vector<long long> targets;
            targets.reserve(static_cast<std::size_t>(2 * n));
            for (long long i = 0; i < n; ++i) {
                targets.push_back(n + 1);
                targets.push_back(n);
            }
            return targets;
        }
    }
    throw internal_error("plan_regeneration: unhandled strategy");
}

enum class action_kind { create_node, adjust_secgroup, join_node, drain_and_terminate };

inline std::string to_string(action_kind k) {
    switch (k) {
        case action_kind::create_node: return "create_node";
        case action_kind::adjust_secgroup: return "adjust_secgroup";
        case action_kind::join_node: return "join_node";
        case action_kind::drain_and_terminate: return "drain_and_terminate";
    }
    return "?";
}

/// One pipeline step. `target` names the victim for shrink actions; for
/// grow actions it is filled in once the new node is materialized.
struct action {
    action_kind kind = action_kind::create_node;
    node_id target = 0;

    bool operator==(const action&) const = default;
};

/// Derives scaling actions from the intended/current size difference.
/// Growth emits one create/secgroup/join triple per missing node; shrink
/// emits one drain+terminate/secgroup pair per surplus node with victims
/// drawn from `victim_pool` (default: all active nodes).
inline std::vector<action> reconcile(const cluster_state& state, rng_stream& rng,
                                     const std::set<node_id>* victim_pool = nullptr,
                                     victim_policy victims = victim_policy::seeded_random) {
    const long long sigma = state.current_size();
    const long long rho = state.intended_size;
    std::vector<action> actions;
    if (rho == sigma) return actions;

    if (rho > sigma) {
        for (long long i = 0; i < rho - sigma; ++i) {
            actions.push_back({action_kind::create_node, 0});
            actions.push_back({action_kind::adjust_secgroup, 0});
            actions.push_back({action_kind::join_node, 0});
        }
        return actions;
    }

    std::vector<node_id> pool;
    for (node_id id : state.active_ids())
        if (victim_pool == nullptr || victim_pool->contains(id)) pool.push_back(id);
    require(static_cast<long long>(pool.size()) >= sigma - rho,
            "reconcile: not enough eligible victims to shrink by " + std::to_string(sigma - rho));

    for (long long i = 0; i < sigma - rho; ++i) {
        std::size_t idx = 0;
        if (victims == victim_policy::seeded_random) {
            idx = rng.pick_index(pool.size());
        } else {
            // oldest active first; ties by id
            for (std::size_t j = 1; j < pool.size(); ++j) {
                const node* best = state.find(pool[idx]);
                const node* cand = state.find(pool[j]);
                if (cand->activated_at < best->activated_at ||
                    (cand->activated_at == best->activated_at && cand->id < best->id))
                    idx = j;
            }
        }
        const node_id victim = pool[idx];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
        actions.push_back({action_kind::drain_and_terminate, victim});
        actions.push_back({action_kind::adjust_secgroup, victim});
    }
    return actions;
}

enum class event_kind {
    node_create_done,
    secgroup_adjusted,
    node_joined,
    node_terminated,
    regen_tick,
    compromise,
    diversify_tick,
    attack_replay,
};

inline std::string to_string(event_kind k) {
    switch (k) {
        case event_kind::node_create_done: return "node_create_done";
        case event_kind::secgroup_adjusted: return "secgroup_adjusted";
        case event_kind::node_joined: return "node_joined";
        case event_kind::node_terminated: return "node_terminated";
        case event_kind::regen_tick: return "regen_tick";
        case event_kind::compromise: return "compromise";
        case event_kind::diversify_tick: return "diversify_tick";
        case event_kind::attack_replay: return "attack_replay";
    }
    return "?";
}

struct sim_event {
    sim_ms at = 0;
    event_kind kind = event_kind::regen_tick;
    node_id target = 0;
    std::uint64_t pipeline = 0;  // grouping id, 0 = not part of a pipeline
    bool pipeline_last = false;  // final event of its pipeline
    bool admit = true;           // secgroup_adjusted: admit vs revoke
    std::uint32_t tag = 0;       // free-form discriminator for scenario events
};

/// Expands an action list into timed completion events, phases strictly
/// sequential from `now`. A secgroup adjustment directly following
/// drain_and_terminate is a revocation and takes the calibration residual
/// instead of secgroup_s.
inline std::vector<sim_event> schedule_pipeline(std::span<const action> actions,
                                                const provider_profile& profile, sim_ms now,
                                                std::uint64_t pipeline_id = 0) {
    profile.validate();
    std::vector<sim_event> events;
    sim_ms clock = now;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const action& a = actions[i];
        sim_event ev;
        ev.target = a.target;
        ev.pipeline = pipeline_id;
        switch (a.kind) {
            case action_kind::create_node:
                clock += ms_from_seconds(static_cast<double>(profile.creation_s));
                ev.kind = event_kind::node_create_done;
                break;
            case action_kind::adjust_secgroup: {
                const bool revoke = i > 0 && actions[i - 1].kind == action_kind::drain_and_terminate;
                clock += ms_from_seconds(static_cast<double>(
                    revoke ? profile.shrink_residual_s() : profile.secgroup_s));
                ev.kind = event_kind::secgroup_adjusted;
                ev.admit = !revoke;
                break;
            }
            case action_kind::join_node:
                clock += ms_from_seconds(static_cast<double>(profile.join_s));
                ev.kind = event_kind::node_joined;
                break;
            case action_kind::drain_and_terminate:
                clock += ms_from_seconds(static_cast<double>(profile.terminate_s));
                ev.kind = event_kind::node_terminated;
                break;
        }
        ev.at = clock;
        ev.pipeline_last = i + 1 == actions.size();
        events.push_back(ev);
    }
    return events;
}

struct reschedule_result {
    int moved = 0;
    int parked = 0;
    bool availability_loss = false;
};

/// Moves the departing node's containers round-robin onto the remaining
/// active nodes (ascending id). With no active node left the containers
/// are parked on the cluster and an availability loss is reported; they
/// re-place when a node next joins.
inline reschedule_result reschedule_containers(cluster_state& state, node_id departing) {
    node* dep = state.find(departing);
    internal_check(dep != nullptr, "reschedule_containers: unknown node " + std::to_string(departing));
    reschedule_result res;
    if (dep->containers.empty()) return res;

    std::vector<node*> targets;
    for (auto& [id, nd] : state.nodes)
        if (id != departing && nd.phase == node_phase::active) targets.push_back(&nd);

    if (targets.empty()) {
        res.availability_loss = true;
        res.parked = static_cast<int>(dep->containers.size());
        state.unscheduled.insert(dep->containers.begin(), dep->containers.end());
        dep->containers.clear();
        return res;
    }

    std::size_t next = 0;
    for (const auto& c : dep->containers) {
        targets[next % targets.size()]->containers.insert(c);
        ++next;
        ++res.moved;
    }
    dep->containers.clear();
    return res;
}

/// Starts the shrink pipeline for a node: active -> draining, with its
/// containers rescheduled immediately.
inline reschedule_result begin_drain(cluster_state& state, node_id id) {
    node* n = state.find(id);
    internal_check(n != nullptr, "begin_drain: unknown node " + std::to_string(id));
    advance_phase(*n, node_phase::draining);
    return reschedule_containers(state, id);
}

struct event_effect {
    bool terminated = false;
    bool was_compromised = false;
    node_id id = 0;
    int containers_recovered = 0; // parked containers placed on a joining node
};

/// Applies one node-lifecycle event. Kinds that do not touch the cluster
/// (regen_tick, compromise, ...) are no-ops here; the simulation loop owns
/// them.
inline event_effect apply_event(cluster_state& state, const sim_event& ev) {
    event_effect effect;
    effect.id = ev.target;
    switch (ev.kind) {
        case event_kind::node_create_done: {
            node* n = state.find(ev.target);
            internal_check(n != nullptr, "node_create_done for unknown node " + std::to_string(ev.target));
            advance_phase(*n, node_phase::joining);
            break;
        }
        case event_kind::secgroup_adjusted: {
            if (ev.admit) {
                internal_check(state.find(ev.target) != nullptr,
                               "secgroup admit for unknown node " + std::to_string(ev.target));
                state.secgroup.insert(ev.target);
            } else {
                const node* n = state.find(ev.target);
                internal_check(n == nullptr || n->phase != node_phase::active,
                               "secgroup revoke would orphan active node " + std::to_string(ev.target));
                state.secgroup.erase(ev.target);
            }
            break;
        }
        case event_kind::node_joined: {
            node* n = state.find(ev.target);
            internal_check(n != nullptr, "node_joined for unknown node " + std::to_string(ev.target));
            advance_phase(*n, node_phase::active);
            internal_check(state.secgroup.contains(ev.target),
                           "node " + std::to_string(ev.target) + " joined outside the secgroup");
            n->activated_at = ev.at;
            n->compromised = false;
            if (!state.unscheduled.empty()) {
                effect.containers_recovered = static_cast<int>(state.unscheduled.size());
                n->containers.insert(state.unscheduled.begin(), state.unscheduled.end());
                state.unscheduled.clear();
            }
            break;
        }
        case event_kind::node_terminated: {
            node* n = state.find(ev.target);
            internal_check(n != nullptr, "node_terminated for unknown node " + std::to_string(ev.target));
            internal_check(n->containers.empty(),
                           "node " + std::to_string(ev.target) + " terminated with containers aboard");
            advance_phase(*n, node_phase::terminating);
            advance_phase(*n, node_phase::gone);
            effect.terminated = true;
            effect.was_compromised = n->compromised;
            state.nodes.erase(ev.target);
            break;
        }
        default:
            break; // scenario-level event, no cluster effect
    }
    return effect;
}

/// Nodes regenerable back-to-back within the horizon: floor(horizon / total).
inline long long regeneration_throughput(const provider_profile& profile, std::int64_t horizon_s) {
    require(horizon_s > 0, "regeneration_throughput: horizon must be > 0");
    require(profile.published_total_s > 0,
            "regeneration_throughput: provider \"" + profile.name + "\" has zero total duration");
    return horizon_s / profile.published_total_s;
}

} // namespace mtdsim
