#include "seqtag/log.hpp"

#include <iostream>
#include <mutex>

namespace seqtag::log {

namespace {

std::mutex& mutex() {
  static std::mutex m;
  return m;
}

const char* label(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warning: return "warning";
    case Level::error: return "error";
  }
  return "?";
}

void stderr_sink(Level level, std::string_view message) {
  std::cerr << "[" << label(level) << "] " << message << '\n';
}

Sink& sink() {
  static Sink s = stderr_sink;
  return s;
}

Level& threshold() {
  static Level l = Level::info;
  return l;
}

}  // namespace

void set_sink(Sink s) {
  std::lock_guard lock(mutex());
  sink() = std::move(s);
}

void reset_sink() { set_sink(stderr_sink); }

void set_threshold(Level level) {
  std::lock_guard lock(mutex());
  threshold() = level;
}

void write(Level level, std::string_view message) {
  std::lock_guard lock(mutex());
  if (level < threshold() || !sink()) return;
  sink()(level, message);
}

}  // namespace seqtag::log
