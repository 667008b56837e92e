#include "taskframe/log.hpp"

#include <iostream>
#include <mutex>

namespace taskframe {

namespace {
std::mutex g_mutex;
WarningSink g_sink;
}  // namespace

void Warn(const std::string& message) {
  WarningSink sink;
  {
    std::lock_guard<std::mutex> lock(g_mutex);
    sink = g_sink;
  }
  if (sink)
    sink(message);
  else
    std::cerr << "warning: " << message << "\n";
}

WarningSink SetWarningSink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(g_mutex);
  WarningSink old = std::move(g_sink);
  g_sink = std::move(sink);
  return old;
}

}  // namespace taskframe
