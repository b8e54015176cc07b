#include "clml/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return clml::run_cli(argc, argv, std::cout, std::cerr); }
