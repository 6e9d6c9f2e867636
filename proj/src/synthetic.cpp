// SPDX-License-Identifier: Apache-2.0
#include <memory>

#include "stratdisc/errors.hpp"
#include "stratdisc/synthetic.hpp"

namespace stratdisc {

const std::vector<ReferenceStrategy>& reference_strategies() {
  static const std::vector<ReferenceStrategy> s = {
      {"no_planning", "False UNTIL IT STOPS APPLYING"},
      {"leaves_until_max",
       "among(not(is_observed) and is_leaf) UNTIL (is_previous_observed_max or are_leaves_observed)"},
      {"roots_then_stop", "among(not(is_observed) and is_root) UNTIL are_roots_observed"},
      {"random", "True UNTIL IT STOPS APPLYING"},
  };
  return s;
}

const ReferenceStrategy& reference_strategy(const std::string& name) {
  for (const auto& s : reference_strategies())
    if (s.name == name) return s;
  throw ConfigError("unknown reference strategy " + name);
}

Dataset synthetic_dataset(const std::vector<std::string>& names, std::size_t num_participants,
                          std::size_t trials_per_participant, std::uint64_t seed, const Environment& env) {
  if (names.empty()) throw ConfigError("no strategies given");
  std::vector<LtlPolicy> policies;
  for (const auto& n : names) policies.emplace_back(parse_procedural(reference_strategy(n).formula));
  std::vector<const Policy*> ptrs;
  for (const auto& p : policies) ptrs.push_back(&p);
  const std::vector<double> proportions(names.size(), 1.0 / static_cast<double>(names.size()));
  return synthesize_dataset(std::make_shared<Environment>(env), ptrs, proportions, num_participants,
                            trials_per_participant, seed);
}

}  // namespace stratdisc
