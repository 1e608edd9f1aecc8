#pragma once

#include <functional>
#include <string_view>

namespace seqtag::log {

enum class Level { debug, info, warning, error };

using Sink = std::function<void(Level, std::string_view)>;

// Messages at or above the threshold go to the sink (stderr by default).
void set_sink(Sink sink);
void reset_sink();
void set_threshold(Level level);

void write(Level level, std::string_view message);
inline void debug(std::string_view m) { write(Level::debug, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void warn(std::string_view m) { write(Level::warning, m); }
inline void error(std::string_view m) { write(Level::error, m); }

}  // namespace seqtag::log
