#include <string>
#include <vector>

#include "volleymc/cli_app.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return volleymc::run_cli(args);
}
