#include <iostream>
#include <string>
#include <vector>

#include "pfdim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pfdim::cli::run(args, std::cout, std::cerr);
}
