#include "aefrc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return aefrc::run_cli(argc, argv, std::cout, std::cerr); }
