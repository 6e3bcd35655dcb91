#include "hrlf_cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return hrlf::cli::run_cli(argc, argv, std::cout, std::cerr); }
