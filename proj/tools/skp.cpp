#include <iostream>

#include "skp/cli.hpp"

int main(int argc, char** argv) { return skp::cli::dispatch(argc, argv, std::cout, std::cerr); }
