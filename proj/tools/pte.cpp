#include <iostream>

#include "pte/cli.hpp"

int main(int argc, char** argv) { return pte::run_cli(argc, argv, std::cout, std::cerr); }
