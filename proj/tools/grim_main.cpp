#include <iostream>

#include "grim/cli.hpp"

int main(int argc, char** argv) { return grim::cli::run(argc, argv, std::cout, std::cerr); }
