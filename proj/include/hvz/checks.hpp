#pragma once

#include <string>
#include <vector>

#include "hvz/localization.hpp"

namespace hvz {

// Free and interacting fiber dispersions against closed forms and a dense
// diagonalization of the materialized fiber.
std::vector<CheckRecord> fiber_checks(const CheckSettings& settings);

// Projector algebra, commutation with invariant Hamiltonians, branching
// against character sums built from cycle types, and row completeness.
std::vector<CheckRecord> symmetry_checks(const CheckSettings& settings);

// Selectors accepted by run_check_suite, "all" last.
const std::vector<std::string>& check_suite_names();

// Runs one named suite ("commutator" includes the Bessel-kernel checks).
// Raises "unknown_suite" for any other name.
std::vector<CheckRecord> run_check_suite(const std::string& name, const CheckSettings& settings = {});

}  // namespace hvz
