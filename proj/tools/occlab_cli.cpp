#include "occlab/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return occlab::cli::main_entry(argc, argv, std::cout, std::cerr); }
