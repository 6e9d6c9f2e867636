// SPDX-License-Identifier: Apache-2.0
// Brute-force predicate evaluator used as a test oracle. It walks the tree
// through parent/child links only and shares no code with the library's
// evaluator.
#pragma once

#include "stratdisc/dsl.hpp"

namespace oracle {

bool eval(const stratdisc::BeliefState& b, stratdisc::Computation c, const stratdisc::dsl::Expr& e);

}  // namespace oracle
