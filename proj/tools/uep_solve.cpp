#include "uep/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return uep::cli::run(argc, argv, std::cout, std::cerr); }
