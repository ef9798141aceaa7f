#include "reef/common.hpp"

#include <spdlog/spdlog.h>

namespace reef {

void Diagnostics::warn(std::string message) {
  spdlog::warn("{}", message);
  warnings_.push_back(std::move(message));
}

void warn(Diagnostics* diag, std::string message) {
  if (diag) {
    diag->warn(std::move(message));
  } else {
    spdlog::warn("{}", message);
  }
}

}  // namespace reef
