#include "iwz/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return iwz::cli::run(argc, argv, std::cout, std::cerr); }
