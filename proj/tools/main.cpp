#include <vector>
#include <string>

#include "mfglab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mfglab::run_cli(args);
}
