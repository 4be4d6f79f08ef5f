#include <doctest.h>

#include <algorithm>

#include "hvz/checks.hpp"

using namespace hvz;

namespace {

bool all_pass(const std::vector<CheckRecord>& records) {
    return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
}

std::size_t count_id(const std::vector<CheckRecord>& records, const std::string& id) {
    return std::count_if(records.begin(), records.end(), [&](const CheckRecord& r) { return r.id == id; });
}

}  // namespace

TEST_CASE("fiber suite") {
    const auto records = fiber_checks({});
    CHECK(all_pass(records));
    for (const auto* id : {"fiber.free_single", "fiber.free_pair", "fiber.yukawa_bound", "fiber.yukawa_dense",
                           "fiber.continuity"})
        CHECK(count_id(records, id) == 1);
}

TEST_CASE("symmetry suite") {
    const auto records = symmetry_checks({});
    CHECK(all_pass(records));
    CHECK(count_id(records, "symmetry.branching") == 1);
    CHECK(count_id(records, "symmetry.row_sum") == 2);
    // A different seed changes the random fields, not the verdict.
    CheckSettings other;
    other.seed = 17;
    CHECK(all_pass(symmetry_checks(other)));
}

TEST_CASE("suite dispatch") {
    const auto& names = check_suite_names();
    CHECK(names.back() == "all");
    CHECK(std::find(names.begin(), names.end(), "commutator") != names.end());

    const auto multiplier = run_check_suite("multiplier");
    CHECK(multiplier.size() == multiplier_checks({}).size());

    try {
        run_check_suite("bogus");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == "unknown_suite");
    }
}
