#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return scopefe::cli::main(argc, argv, std::cout, std::cerr); }
