#include <iostream>

#include "cli.h"

int main(int argc, char** argv) { return adx3::cli::run(argc, argv, std::cout, std::cerr); }
