#include <iostream>

#include "chx_cli.hpp"

int main(int argc, char** argv) { return chx::cli::run(argc, argv, std::cout, std::cerr); }
