#include <iostream>
#include <string>
#include <vector>

#include "dhinf/cli.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return dhinf::cli::Run(args, std::cout, std::cerr);
}
