#include <iostream>

#include "hsm/cli.hpp"

int main(int argc, char** argv) { return hsm::run_cli(argc, argv, std::cout, std::cerr); }
