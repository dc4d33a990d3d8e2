#include "latticelab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return latticelab::cli::run_command(argc, argv, std::cout, std::cerr); }
