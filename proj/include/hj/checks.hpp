#ifndef HJ_CHECKS_HPP
#define HJ_CHECKS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hj {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/**
 * Randomized invariant suites (>= 100 cases each, driven by `seed`):
 * step monotonicity, forward/backward duality, per-step contraction,
 * Fenchel-Young gap of the tabulated Lagrangian, conservation and decay
 * of H along the contact flow, and monotone ascent from zero.
 */
std::vector<CheckResult> run_property_suite(uint64_t seed);

/**
 * The full acceptance battery. One line per criterion is written to `log`
 * as it completes (pass/fail, detail, wall time).
 */
std::vector<CheckResult> run_acceptance(uint64_t seed, std::ostream& log);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace hj

#endif
