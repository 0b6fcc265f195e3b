#pragma once

#include <string>

namespace semvo::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold comes from SEMVO_LOG (error|warn|info|debug); default is warn.
// Unknown values fall back to warn with a note on stderr.
Level threshold();
void set_threshold(Level level);

void write(Level level, const std::string& message);

inline void error(const std::string& m) { write(Level::Error, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void debug(const std::string& m) { write(Level::Debug, m); }

}  // namespace semvo::log
