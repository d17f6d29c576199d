// Runs every acceptance criterion and prints one pass/fail line per criterion.
// Optional argument: a filter (comma-separated ids or name prefixes).

#include <iostream>

#include "brwlab/harness.hpp"

int main(int argc, char** argv) {
    const std::string_view filter = argc > 1 ? argv[1] : "";
    return brwlab::run_acceptance_suite(filter, std::cout).exit_status();
}
