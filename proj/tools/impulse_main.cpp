#include <iostream>

#include "impulse/cli.hpp"

int main(int argc, char** argv) {
  return impulse::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
