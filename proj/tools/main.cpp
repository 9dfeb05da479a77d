#include "mfgsec/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mfgsec::cli::main_entry(argc, argv, std::cout, std::cerr); }
