#include <iostream>

#include "asif/cli.hpp"

int main(int argc, char** argv) { return asif::run_cli(argc, argv, std::cout, std::cerr); }
