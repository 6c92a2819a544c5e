#pragma once

#include "qlink/sim/scenario.hpp"
#include "qlink/sim/workload.hpp"

namespace qlink::sim {

/// Wires all components, drives the run, and audits the invariants:
/// NEXT determinism across the nodes, OK/EXPIRE sequence-number consistency
/// against the station's success log, and registry hygiene.
RunResult run_scenario(const ScenarioConfig& sc, const WorkloadConfig& wl);

}  // namespace qlink::sim
