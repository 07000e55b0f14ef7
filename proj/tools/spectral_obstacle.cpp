#include <iostream>
#include <string>
#include <vector>

#include "specobs/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return specobs::cli::run(args, std::cout, std::cerr);
}
