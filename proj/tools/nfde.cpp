#include <iostream>

#include "nfde/cli.hpp"

int main(int argc, char** argv) { return nfde::cli::run(argc, argv, std::cout, std::cerr); }
