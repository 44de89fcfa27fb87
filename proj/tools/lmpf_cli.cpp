#include <iostream>

#include "lmpf/cli.hpp"

int main(int argc, char** argv) { return lmpf::run_cli(argc, argv, std::cout, std::cerr); }
