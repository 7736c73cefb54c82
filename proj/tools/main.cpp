#include <iostream>
#include <string>
#include <vector>

#include "spanrel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spanrel::run(args, std::cout, std::cerr);
}
