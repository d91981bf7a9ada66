#include <iostream>

#include "mfhd/cli.hpp"

int main(int argc, char** argv) {
  return mfhd::run_cli(argc, argv, std::cout, std::cerr);
}
