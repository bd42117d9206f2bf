#include <iostream>

#include "seqchart/cli.hpp"

int main(int argc, char** argv) { return seqchart::cli_main(argc, argv, std::cout, std::cerr); }
