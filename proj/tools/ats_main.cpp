#include <iostream>

#include "ats/cli.hpp"

int main(int argc, char** argv) { return ats::run_cli(argc, argv, std::cout, std::cerr); }
