#include <iostream>

#include "qipf_cli/commands.hpp"

int main(int argc, char** argv) { return qipf::cli::run_cli(argc, argv, std::cout, std::cerr); }
