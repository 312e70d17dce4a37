#include <vector>

#include "ngrad/cli.hpp"

int main(int argc, char** argv) {
  return ngrad::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
