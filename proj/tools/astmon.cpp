#include <iostream>

#include "astmon/cli.hpp"

int main(int argc, char** argv) { return astmon::cli::main(argc, argv, std::cout, std::cerr); }
