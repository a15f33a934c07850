#include <iostream>

#include "dopt/app/cli.hpp"

int main(int argc, char** argv) { return dopt::app::run_cli(argc, argv, std::cout, std::cerr); }
