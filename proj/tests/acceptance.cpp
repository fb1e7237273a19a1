// SPDX-License-Identifier: Apache-2.0
// Acceptance criteria 1-12 at their default settings: one PASS/FAIL line
// per criterion, nonzero exit status if any fails.

#include "acceptance.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

int main(int argc, char **argv)
{
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i)
        ids.push_back(std::atoi(argv[i]));
    const bool ok = relaylab::acceptance::run_suite(relaylab::acceptance::Settings{}, ids, stdout);
    std::printf("acceptance: %s\n", ok ? "all criteria pass" : "some criteria fail");
    return ok ? EXIT_SUCCESS : EXIT_FAILURE;
}
