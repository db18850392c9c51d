#include <iostream>

#include "tumorsynth/cli.hpp"

int main(int argc, char** argv) { return tumorsynth::run_cli(argc, argv, std::cout, std::cerr); }
