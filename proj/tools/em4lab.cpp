#include "cli.hpp"

#include <cstdio>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const em4lab::cli::Outcome o = em4lab::cli::run(args);
  std::fwrite(o.output.data(), 1, o.output.size(), stdout);
  std::fwrite(o.error.data(), 1, o.error.size(), stderr);
  return o.exit_code;
}
