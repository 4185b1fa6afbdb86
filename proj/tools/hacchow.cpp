#include "hacchow/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hacchow::cli::run(argc, argv, std::cout, std::cerr); }
