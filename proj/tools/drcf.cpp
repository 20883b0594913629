#include <iostream>

#include "drcf/cli.hpp"

int main(int argc, char** argv) { return drcf::cli::run(argc, argv, std::cout, std::cerr); }
