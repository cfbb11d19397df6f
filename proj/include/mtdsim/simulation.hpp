#pragma once

// Discrete-event engine tying the pieces together. Runs a scenario to its
// horizon and collects a metrics report. Events are ordered by timestamp
// with insertion order as the tie breaker, and every random decision comes
// from a named substream of the scenario seed, so identical inputs give
// identical outputs down to the emitted bytes.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "mtdsim/attacker.hpp"
#include "mtdsim/cluster.hpp"
#include "mtdsim/errors.hpp"
#include "mtdsim/metrics.hpp"
#include "mtdsim/risk.hpp"
#include "mtdsim/rng.hpp"
#include "mtdsim/scenario.hpp"

namespace mtdsim {

namespace stream {
// Substream tags; one independent RNG per concern keeps decisions
// uncoupled from event interleaving.
inline constexpr std::uint64_t victims = 1;
inline constexpr std::uint64_t arrivals = 2;
inline constexpr std::uint64_t targets = 3;
inline constexpr std::uint64_t planner = 4;
} // namespace stream

class simulation {
public:
    explicit simulation(scenario sc)
        : sc_(std::move(sc)),
          victim_rng_(derive_stream_seed(sc_.seed, stream::victims)),
          target_rng_(derive_stream_seed(sc_.seed, stream::targets)) {
        sc_.validate();
        horizon_ms_ = ms_from_seconds(static_cast<double>(sc_.horizon_s));
        state_ = make_cluster(sc_.cluster_size);
        for (const auto& [name, fx] : sc_.services) current_variants_[name] = fx.current;
        place_initial_containers();

        report_.scenario = sc_.name;
        report_.provider = sc_.provider.name;
        report_.cluster_size = sc_.cluster_size;
        report_.seed = sc_.seed;
        report_.horizon_s = sc_.horizon_s;
        report_.sigma_min = report_.sigma_max = footprint();

        if (sc_.regeneration) push({0, event_kind::regen_tick, 0, 0, false, true, tag_pass_start});
        if (sc_.diversify && sc_.diversify->trigger == diversify_trigger::scheduled)
            push({ms_from_seconds(static_cast<double>(sc_.diversify->period_s)),
                  event_kind::diversify_tick, 0, 0, false, true, 0});
        if (sc_.attacker) schedule_attacker();
    }

    /// Runs to the horizon. Events stamped exactly at the horizon still
    /// execute; anything later stays unprocessed.
    metrics_report run() {
        internal_check(!ran_, "simulation::run called twice");
        ran_ = true;
        while (!queue_.empty() && queue_.top().ev.at <= horizon_ms_) {
            const sim_event ev = queue_.top().ev;
            queue_.pop();
            dispatch(ev);
            track_sigma();
            state_.check_invariants();
        }
        finish_baseline_detection();
        report_.compromises = records_;
        report_.dwell = dwell_metrics(records_);
        report_.check_consistency();
        return report_;
    }

    const cluster_state& state() const { return state_; }
    const std::map<std::string, std::string>& current_variants() const { return current_variants_; }
    const std::vector<compromise_record>& compromises() const { return records_; }

    std::map<std::string, scan_report> deployed_reports() const {
        std::map<std::string, scan_report> out;
        for (const auto& [name, variant] : current_variants_)
            out.emplace(name, sc_.services.at(name).reports.at(variant));
        return out;
    }

private:
    static constexpr std::uint32_t tag_pass_start = 0;
    static constexpr std::uint32_t tag_stage_start = 1;
    static constexpr std::uint32_t tag_injection = 0;
    static constexpr std::uint32_t tag_arrival = 1;

    struct queued {
        std::uint64_t seq = 0;
        sim_event ev;
    };
    struct queued_after {
        bool operator()(const queued& a, const queued& b) const {
            if (a.ev.at != b.ev.at) return a.ev.at > b.ev.at;
            return a.seq > b.seq;
        }
    };

    struct pipeline_unit {
        bool grow = false;
        node_id fresh = 0;    // grow: node being built
        node_id victim = 0;   // shrink: node being removed
        node_id replaced_by = 0;
        sim_ms grow_start = 0;
    };

    struct pass_state {
        std::vector<long long> targets;
        std::size_t stage = 0;
        std::set<node_id> cohort;
        int outstanding = 0;
        std::deque<std::pair<node_id, sim_ms>> unmatched; // joined grows awaiting a victim
    };

    void push(sim_event ev) { queue_.push({next_seq_++, ev}); }

    void place_initial_containers() {
        if (sc_.services.empty()) return;
        std::vector<node_id> ids = state_.active_ids();
        std::size_t i = 0;
        for (const auto& [name, fx] : sc_.services) {
            (void)fx;
            state_.nodes.at(ids[i % ids.size()]).containers.insert(name);
            ++i;
        }
    }

    void schedule_attacker() {
        const attacker_config& atk = *sc_.attacker;
        for (auto t : atk.injections_s)
            push({ms_from_seconds(static_cast<double>(t)), event_kind::compromise, 0, 0, false, true,
                  tag_injection});
        if (atk.interarrival_s) {
            rng_stream arrivals(derive_stream_seed(sc_.seed, stream::arrivals));
            double t = 0.0;
            while (true) {
                t += arrivals.exponential(static_cast<double>(*atk.interarrival_s));
                const sim_ms at = ms_from_seconds(t);
                if (at > horizon_ms_) break;
                push({at, event_kind::compromise, 0, 0, false, true, tag_arrival});
            }
        }
        if (atk.replay_period_s) {
            for (std::int64_t t = *atk.replay_period_s; t <= sc_.horizon_s; t += *atk.replay_period_s)
                push({ms_from_seconds(static_cast<double>(t)), event_kind::attack_replay, 0, 0, false,
                      true, 0});
        }
    }

    void dispatch(const sim_event& ev) {
        switch (ev.kind) {
            case event_kind::node_create_done:
            case event_kind::secgroup_adjusted:
            case event_kind::node_joined:
            case event_kind::node_terminated:
                apply_lifecycle(ev);
                break;
            case event_kind::regen_tick:
                if (ev.tag == tag_pass_start)
                    start_pass(ev.at);
                else
                    start_stage(ev.at);
                break;
            case event_kind::compromise:
                handle_compromise(ev);
                break;
            case event_kind::diversify_tick:
                apply_diversification(ev.at);
                break;
            case event_kind::attack_replay:
                handle_replay(ev.at);
                break;
        }
    }

    void apply_lifecycle(const sim_event& ev) {
        const event_effect effect = apply_event(state_, ev);
        if (ev.kind == event_kind::node_joined) {
            report_.containers_rescheduled += effect.containers_recovered;
            if (pass_) {
                auto it = units_.find(ev.pipeline);
                if (it != units_.end() && it->second.grow)
                    pass_->unmatched.emplace_back(ev.target, it->second.grow_start);
            }
        }
        if (ev.kind == event_kind::node_terminated && effect.was_compromised)
            close_dwell_on_termination(records_, ev.target, ev.at);
        if (ev.pipeline != 0 && ev.pipeline_last) unit_done(ev);
    }

    void unit_done(const sim_event& ev) {
        auto it = units_.find(ev.pipeline);
        internal_check(it != units_.end(), "completion event for unknown pipeline");
        const pipeline_unit unit = it->second;
        units_.erase(it);
        if (!unit.grow) {
            report_.timings.push_back({unit.victim, unit.replaced_by,
                                       seconds_from_ms(unit.grow_start), seconds_from_ms(ev.at)});
            ++report_.regenerations;
        }
        internal_check(pass_.has_value(), "pipeline completed outside a regeneration pass");
        internal_check(pass_->outstanding > 0, "pipeline completion with no outstanding units");
        if (--pass_->outstanding == 0) stage_done(ev.at);
    }

    void start_pass(sim_ms now) {
        if (!sc_.regeneration) return;
        internal_check(!pass_.has_value(), "regeneration pass started while one is active");
        pass_state pass;
        pass.targets = plan_regeneration(*sc_.regeneration, sc_.cluster_size);
        for (node_id id : state_.active_ids()) pass.cohort.insert(id);
        pass_ = std::move(pass);
        start_stage(now);
    }

    void start_stage(sim_ms now) {
        internal_check(pass_.has_value(), "stage start without an active pass");
        pass_state& pass = *pass_;
        internal_check(pass.stage < pass.targets.size(), "stage index out of range");
        state_.intended_size = pass.targets[pass.stage];
        std::vector<action> actions =
            reconcile(state_, victim_rng_, &pass.cohort, sc_.regeneration->victims);
        internal_check(!actions.empty(), "regeneration stage reconciled to a no-op");

        // Units (one node's triple or pair) run in parallel within a stage;
        // only the doubling strategy produces more than one per stage.
        std::size_t i = 0;
        while (i < actions.size()) {
            const std::uint64_t pid = next_pipeline_++;
            pipeline_unit unit;
            if (actions[i].kind == action_kind::create_node) {
                internal_check(i + 2 < actions.size() &&
                                   actions[i + 1].kind == action_kind::adjust_secgroup &&
                                   actions[i + 2].kind == action_kind::join_node,
                               "malformed grow unit from reconcile");
                unit.grow = true;
                unit.fresh = state_.spawn(now);
                unit.grow_start = now;
                actions[i].target = actions[i + 1].target = actions[i + 2].target = unit.fresh;
                const auto events =
                    schedule_pipeline(std::span(actions).subspan(i, 3), sc_.provider, now, pid);
                for (const auto& e : events) push(e);
                i += 3;
            } else {
                internal_check(actions[i].kind == action_kind::drain_and_terminate &&
                                   i + 1 < actions.size() &&
                                   actions[i + 1].kind == action_kind::adjust_secgroup,
                               "malformed shrink unit from reconcile");
                unit.victim = actions[i].target;
                internal_check(!pass.unmatched.empty(),
                               "shrink unit scheduled with no replacement to pair");
                unit.replaced_by = pass.unmatched.front().first;
                unit.grow_start = pass.unmatched.front().second;
                pass.unmatched.pop_front();
                pass.cohort.erase(unit.victim);
                const reschedule_result moved = begin_drain(state_, unit.victim);
                report_.containers_rescheduled += moved.moved;
                if (moved.availability_loss) ++report_.availability_losses;
                const auto events =
                    schedule_pipeline(std::span(actions).subspan(i, 2), sc_.provider, now, pid);
                for (const auto& e : events) push(e);
                i += 2;
            }
            ++pass.outstanding;
            units_.emplace(pid, unit);
        }
    }

    void stage_done(sim_ms now) {
        pass_state& pass = *pass_;
        const bool was_shrink = pass.targets[pass.stage] < (pass.stage == 0
                                                               ? sc_.cluster_size
                                                               : pass.targets[pass.stage - 1]);
        ++pass.stage;
        const sim_ms cadence = ms_from_seconds(static_cast<double>(sc_.regeneration->cadence_s));
        if (pass.stage < pass.targets.size()) {
            // A shrink stage closes a round; the cadence gap applies there.
            if (was_shrink && cadence > 0)
                push({now + cadence, event_kind::regen_tick, 0, 0, false, true, tag_stage_start});
            else
                start_stage(now);
            return;
        }
        internal_check(pass.unmatched.empty(), "regeneration pass ended with unpaired nodes");
        pass_.reset();
        ++report_.passes;
        push({now + cadence, event_kind::regen_tick, 0, 0, false, true, tag_pass_start});
    }

    void handle_compromise(const sim_event& ev) {
        const std::vector<node_id> active = state_.active_ids();
        if (active.empty()) return;
        const node_id target = active[target_rng_.pick_index(active.size())];
        inject_compromise(state_, records_, target, ev.at,
                          ev.tag == tag_injection ? "injection" : "arrival");
    }

    void apply_diversification(sim_ms now) {
        const auto deployed = deployed_reports();
        std::vector<security_risk> risks;
        const owasp_score_table& table = builtin_owasp_table();
        for (const auto& [name, rep] : deployed) risks.push_back(service_risk_orrm(rep, table));

        std::map<std::string, std::set<std::string>> variants;
        for (const auto& [name, fx] : sc_.services) {
            for (const auto& [variant, rep] : fx.reports) {
                (void)rep;
                variants[name].insert(variant);
            }
        }
        const diversification_plan plan =
            plan_diversification(std::move(risks), sc_.diversify->index, variants, current_variants_,
                                 derive_stream_seed(sc_.seed, stream::planner));
        for (const auto& [service, variant] : plan.assignments) {
            report_.switches.push_back(
                {service, current_variants_.at(service), variant, seconds_from_ms(now)});
            current_variants_[service] = variant;
        }
    }

    void handle_replay(sim_ms now) {
        const auto deployed = deployed_reports();
        for (const auto& script : sc_.attacker->scripts) {
            const replay_result res = replay_script(script, deployed);
            report_.replays.push_back({seconds_from_ms(now), script.name, res.success});
        }
    }

    void finish_baseline_detection() {
        if (!sc_.attacker) return;
        const sim_ms window = ms_from_seconds(static_cast<double>(sc_.attacker->baseline_detection_s));
        for (auto& rec : records_) {
            if (!rec.open()) continue;
            const sim_ms detect_at = rec.start + window;
            if (detect_at <= horizon_ms_) rec.end = detect_at;
        }
    }

    // fleet footprint: every extant node counts, whatever its phase
    long long footprint() const { return static_cast<long long>(state_.nodes.size()); }

    void track_sigma() {
        const long long sigma = footprint();
        report_.sigma_min = std::min(report_.sigma_min, sigma);
        report_.sigma_max = std::max(report_.sigma_max, sigma);
    }

    scenario sc_;
    rng_stream victim_rng_;
    rng_stream target_rng_;
    sim_ms horizon_ms_ = 0;
    cluster_state state_;
    std::map<std::string, std::string> current_variants_;
    std::priority_queue<queued, std::vector<queued>, queued_after> queue_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_pipeline_ = 1;
    std::map<std::uint64_t, pipeline_unit> units_;
    std::optional<pass_state> pass_;
    std::vector<compromise_record> records_;
    metrics_report report_;
    bool ran_ = false;
};

/// One-call convenience for tools and tests.
inline metrics_report run_scenario(scenario sc) { return simulation(std::move(sc)).run(); }

} // namespace mtdsim
