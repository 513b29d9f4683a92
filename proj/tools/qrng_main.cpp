#include <iostream>
#include <string>
#include <vector>

#include "qrng_cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qrng::cli::run(std::move(args), std::cout, std::cerr);
}
