#include <vector>

#include "divafn/cli.hpp"

int main(int argc, char** argv) {
  return divafn::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
