#include <iostream>

#include "hj/checks.hpp"

int main(int argc, char** argv) {
    uint64_t seed = 12345;
    if (argc > 1) seed = std::stoull(argv[1]);
    auto results = hj::run_acceptance(seed, std::cout);
    int failed = 0;
    for (const auto& r : results)
        if (!r.passed) ++failed;
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
