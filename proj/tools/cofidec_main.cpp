#include "cofidec/cli.hpp"

int main(int argc, char** argv) {
  return cofidec::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
