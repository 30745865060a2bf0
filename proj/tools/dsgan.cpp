#include <iostream>
#include <string>
#include <vector>

#include "dsgan/cli/commands.hpp"

int main(int argc, char** argv) {
  return dsgan::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
