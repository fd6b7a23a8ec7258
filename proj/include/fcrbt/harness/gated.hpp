#pragma once

#include <chrono>
#include <string>

#include "fcrbt/concurrent_map.hpp"

namespace fcrbt::harness {

enum class GatedScenario {
  // Readers held before/after a soft insert's mark flip.
  SoftInsertVisibility,
  // Mirror image for a soft delete.
  SoftDeleteVisibility,
  // A queue-bypassing get raises its mark just as the combiner raises the
  // stop flags; the get must back off and see the post-insert tree.
  V6StopWorldRace,
};

const char* to_string(GatedScenario s);

struct GateOutcome {
  bool passed = false;
  std::string detail;
};

/// Drives one deterministic interleaving through explicit gates. Any gate
/// not reached within `gate_timeout` fails the run.
GateOutcome run_gated_scenario(GatedScenario scenario, VariantId variant,
                               std::chrono::milliseconds gate_timeout = std::chrono::seconds(10));

}  // namespace fcrbt::harness
