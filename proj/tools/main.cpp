#include <iostream>
#include <string>
#include <vector>

#include "onebit/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return onebit::cli::run(args, std::cout, std::cerr);
}
