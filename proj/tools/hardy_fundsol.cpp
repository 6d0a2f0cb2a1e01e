#include <iostream>
#include <string>
#include <vector>

#include "hardy/cli_io.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hardy::cli::run_cli(args, std::cout, std::cerr);
}
