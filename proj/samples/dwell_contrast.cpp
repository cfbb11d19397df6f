// Contrast attacker dwell with and without node renewal. Both runs see the
// same compromise injections; only the second one regenerates nodes.

#include <cstdint>
#include <iostream>
#include <vector>

#include "mtdsim/mtdsim.hpp"

using namespace mtdsim;

namespace {

scenario base(long long nodes, std::int64_t horizon_s) {
    scenario sc;
    sc.name = "dwell-contrast";
    sc.provider = *find_builtin_provider("aws");
    sc.cluster_size = nodes;
    sc.horizon_s = horizon_s;
    attacker_config atk;
    atk.injections_s = {100, 5000, 9000, 50000, 123456};
    sc.attacker = atk;
    return sc;
}

void describe(const char* label, const metrics_report& rep) {
    std::cout << label << ":\n"
              << "  compromises closed " << rep.dwell.closed << ", still open " << rep.dwell.open
              << "\n"
              << "  dwell median " << rep.dwell.median_s << " s, mean " << rep.dwell.mean_s
              << " s, max " << rep.dwell.max_s << " s\n";
}

} // namespace

int main() {
    scenario idle = base(5, 10368000);
    describe("no renewal (99-day detection window)", run_scenario(idle));

    scenario renewed = base(5, 10368000);
    regeneration_policy pol;
    pol.strategy = regen_strategy::rolling_one;
    pol.cadence_s = 0;
    pol.victims = victim_policy::round_robin;
    renewed.regeneration = pol;
    describe("rolling renewal, oldest node first", run_scenario(renewed));
    return 0;
}
