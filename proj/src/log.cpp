#include "igsf/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace igsf {

namespace {
std::atomic<bool> warnings_enabled{true};
}

void log_warning(const std::string& message) {
  if (!warnings_enabled.load(std::memory_order_relaxed)) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[igsf] warning: " << message << "\n";
}

void set_log_warnings(bool enabled) {
  warnings_enabled.store(enabled, std::memory_order_relaxed);
}

}  // namespace igsf
