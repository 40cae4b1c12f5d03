#include <iostream>
#include <string>
#include <vector>

#include "tilebench/cli/app.hpp"

int main(int argc, char** argv) {
  return tilebench::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
