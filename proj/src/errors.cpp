#include "renormfock/errors.hpp"

#include <iostream>
#include <mutex>

namespace renormfock {

namespace {
std::mutex g_warn_mutex;
WarningHandler g_handler;
}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_warn_mutex);
  std::swap(g_handler, handler);
  return handler;
}

void warn(const std::string& message) {
  std::lock_guard lock(g_warn_mutex);
  if (g_handler) {
    g_handler(message);
  } else {
    std::cerr << "renormfock warning: " << message << '\n';
  }
}

}  // namespace renormfock
