#include <iostream>

#include "dica/cli.hpp"

int main(int argc, char** argv) { return dica::cli::run(argc, argv, std::cout, std::cerr); }
