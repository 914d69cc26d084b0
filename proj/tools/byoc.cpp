#include <iostream>

#include "byoc/gateway.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return byoc::gateway::run_cli(args, std::cin, std::cout, std::cerr);
}
