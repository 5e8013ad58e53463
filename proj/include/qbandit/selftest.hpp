#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace qbandit::selftest {

struct SuiteReport {
    std::string name;
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::vector<std::string> failures;  // one line per failed property

    bool ok() const noexcept { return failed == 0; }
};

/// Randomized invariants of the amplitude-amplification core.
SuiteReport amp_core_suite(std::uint64_t seed, std::size_t samples = 2000);

/// Invariants of the policy layer (distributions, phase ranges, IX bias,
/// baseline reduction).
SuiteReport policies_suite(std::uint64_t seed, std::size_t samples = 500);

}  // namespace qbandit::selftest
