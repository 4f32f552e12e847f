#include <iostream>

#include "awbench/cli.hpp"

int main(int argc, char** argv) { return awbench::cli_main(argc, argv, std::cout, std::cerr); }
