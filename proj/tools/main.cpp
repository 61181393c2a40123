#include <iostream>
#include <string>
#include <vector>

#include "ticketlab/cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return ticketlab::cli::run(args, std::cout, std::cerr);
}
