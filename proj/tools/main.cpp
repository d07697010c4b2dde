#include <iostream>
#include <string>
#include <vector>

#include "crcgram/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return crcgram::cli::run(args, std::cout, std::cerr);
}
