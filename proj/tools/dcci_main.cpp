#include <iostream>

#include "dcci/cli.hpp"

int main(int argc, char** argv) { return dcci::cli::run(argc, argv, std::cout, std::cerr); }
