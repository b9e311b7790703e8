#include <iostream>

#include "tunevault/ctl.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tunevault::run_ctl(args, std::cout, std::cerr);
}
