#include "vica/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return vica::cli::run_cli(argc, argv, std::cout, std::cerr);
}
