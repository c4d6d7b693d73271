#include <iostream>

#include "fimest/cli.hpp"

int main(int argc, char** argv) { return fimest::cli::run(argc, argv, std::cout, std::cerr); }
