// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <cstdlib>
#include <cstring>
#include <iostream>

#include "fedsea/selftest.hpp"

int main(int argc, char** argv) {
    fedsea::selftest::SuiteOptions opts;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::strcmp(argv[i], "--scratch") == 0) opts.scratch = argv[++i];
        else if (std::strcmp(argv[i], "--threads") == 0) opts.threads = std::strtoull(argv[++i], nullptr, 10);
        else if (std::strcmp(argv[i], "--replicates") == 0) opts.replicates = std::strtoull(argv[++i], nullptr, 10);
    }
    fedsea::selftest::Suite suite(opts);
    int failed = 0;
    suite.run_all([&](const fedsea::selftest::CriterionResult& r) {
        std::cout << fedsea::selftest::format_line(r) << std::endl;
        failed += r.pass ? 0 : 1;
    });
    std::cout << (failed == 0 ? "all 11 criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
