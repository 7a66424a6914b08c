#include <iostream>
#include <string>
#include <vector>

#include "splitrender/harness.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return splitrender::run_cli(args, std::cout, std::cerr);
}
