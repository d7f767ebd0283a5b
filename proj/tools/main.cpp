#include <iostream>
#include <string>
#include <vector>

#include "rumour/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rumour::cli::dispatch(args, std::cout, std::cerr);
}
