#include <iostream>
#include <string>
#include <vector>

#include "birklab/expcli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return birklab::run_cli(args, std::cout, std::cerr);
}
