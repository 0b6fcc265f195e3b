#include "semvo/logging.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace semvo::log {
namespace {

Level g_threshold = Level::Warn;
std::once_flag g_env_once;
std::mutex g_write_mutex;

const char* level_tag(Level level) {
  switch (level) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
  }
  return "?";
}

void init_from_env() {
  const char* env = std::getenv("SEMVO_LOG");
  if (env == nullptr) return;
  const std::string value(env);
  if (value == "error") g_threshold = Level::Error;
  else if (value == "warn") g_threshold = Level::Warn;
  else if (value == "info") g_threshold = Level::Info;
  else if (value == "debug") g_threshold = Level::Debug;
  else std::fprintf(stderr, "[semvo warn] SEMVO_LOG=%s not recognized, using warn\n", env);
}

}  // namespace

Level threshold() {
  std::call_once(g_env_once, init_from_env);
  return g_threshold;
}

void set_threshold(Level level) {
  std::call_once(g_env_once, init_from_env);
  g_threshold = level;
}

void write(Level level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  std::lock_guard<std::mutex> lock(g_write_mutex);
  std::fprintf(stderr, "[semvo %s] %s\n", level_tag(level), message.c_str());
}

}  // namespace semvo::log
