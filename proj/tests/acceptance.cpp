// Acceptance driver: prints one PASS/FAIL line per criterion. With arguments, runs only
// the named criteria.
#include <cstdio>
#include <set>
#include <string>

#include "dyson_ldp/acceptance.hpp"

int main(int argc, char** argv) {
    namespace acc = dyson_ldp::acceptance;
    std::set<std::string> only(argv + 1, argv + argc);
    bool all = true;
    std::size_t ran = 0;
    for (const auto& c : acc::criteria()) {
        if (!only.empty() && !only.count(c.id)) continue;
        const acc::Result r = acc::run(c);
        std::printf("%s\n", acc::format_line(r).c_str());
        std::fflush(stdout);
        all = all && r.pass;
        ++ran;
    }
    if (ran == 0) {
        std::fprintf(stderr, "no matching criterion\n");
        return 2;
    }
    return all ? 0 : 1;
}
