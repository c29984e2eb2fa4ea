// Runs the randomized invariant checks, optionally restricted to one module.
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "property_suite.hpp"

int main(int argc, char** argv) {
    CLI::App app{"randomized invariant checks"};
    std::string module;
    std::size_t cases = 1000;
    std::uint64_t seed = 1;
    app.add_option("--module", module, "only this module");
    app.add_option("--cases", cases, "cases per property");
    app.add_option("--seed", seed, "base seed");
    CLI11_PARSE(app, argc, argv);

    int failed = 0, ran = 0;
    for (const auto& p : tdotag::props::all_properties()) {
        if (!module.empty() && p.module != module) continue;
        const auto r = tdotag::props::run_property(p, cases, seed);
        ++ran;
        std::printf("%-4s %s/%s %zu/%zu%s%s\n", r.failures ? "FAIL" : "ok", r.module.c_str(), r.name.c_str(),
                    r.cases - r.failures, r.cases, r.failures ? "  " : "", r.first_failure.c_str());
        failed += r.failures > 0;
    }
    if (ran == 0) {
        std::fprintf(stderr, "no properties for module '%s'\n", module.c_str());
        return 2;
    }
    return failed ? 1 : 0;
}
