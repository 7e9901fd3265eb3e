#include "fcdlif/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace fcdlif::log {
namespace {

std::mutex g_mutex;

void stderr_sink(Level level, std::string_view message) {
  static constexpr std::string_view kNames[] = {"debug", "info", "warning", "error"};
  std::cerr << "[fcdlif " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

Sink& current() {
  static Sink sink = stderr_sink;
  return sink;
}

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  return std::exchange(current(), sink ? std::move(sink) : Sink(stderr_sink));
}

void write(Level level, std::string_view message) {
  std::lock_guard lock(g_mutex);
  current()(level, message);
}

}  // namespace fcdlif::log
