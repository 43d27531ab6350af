#include <iostream>
#include <string>
#include <vector>

#include "adafl/harness/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return adafl::run_cli(args, std::cout, std::cerr);
}
