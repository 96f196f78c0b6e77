#include <iostream>

#include "afterpulse/cli.hpp"

int main(int argc, char** argv) {
    return afterpulse::run_cli(argc, argv, std::cout, std::cerr);
}
