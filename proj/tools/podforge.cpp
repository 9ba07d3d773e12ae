#include <iostream>

#include "podforge/cli.hpp"

int main(int argc, char** argv) {
    return podforge::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
