#include "lode/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return lode::cli::run(argc, argv, std::cout, std::cerr); }
