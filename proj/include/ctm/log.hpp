#pragma once

#include <string>

namespace ctm {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

// Level comes from the CTM_LOG environment variable (debug|info|warn|error,
// default warn) unless overridden here.
void set_log_level(LogLevel level);
LogLevel log_level();

void log_msg(LogLevel level, const std::string& message);

}  // namespace ctm
