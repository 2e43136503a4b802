#include <iostream>

#include "flexact/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return flexact::cli::run(args, std::cout, std::cerr);
}
