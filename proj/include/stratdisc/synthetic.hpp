// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "stratdisc/procedural.hpp"
#include "stratdisc/trace.hpp"

namespace stratdisc {

/// A named ground-truth strategy written as a procedural formula.
struct ReferenceStrategy {
  std::string name;
  std::string formula;
};

/// no_planning, leaves_until_max, roots_then_stop, random.
const std::vector<ReferenceStrategy>& reference_strategies();
const ReferenceStrategy& reference_strategy(const std::string& name);

/// Participants split evenly over the named strategies (remainder to the
/// first ones); each plays trials_per_participant trials. Trial labels give
/// the strategy index within `names`.
Dataset synthetic_dataset(const std::vector<std::string>& names, std::size_t num_participants,
                          std::size_t trials_per_participant, std::uint64_t seed,
                          const Environment& env = Environment::standard());

}  // namespace stratdisc
