#include <iostream>
#include <string>
#include <vector>

#include "plsa/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return plsa::run_cli(args, std::cout, std::cerr);
}
