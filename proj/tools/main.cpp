#include <iostream>

#include "sheetmax/cli.hpp"

int main(int argc, char** argv) { return sheetmax::run_cli(argc, argv, std::cout, std::cerr); }
