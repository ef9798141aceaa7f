#include "reef/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("reefpam"));
  std::vector<std::string> args(argv, argv + argc);
  return reef::cli::run(args, std::cout, std::cerr);
}
