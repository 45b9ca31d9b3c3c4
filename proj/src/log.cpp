#include "ctm/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace ctm {

namespace {

LogLevel level_from_env() {
    const char* env = std::getenv("CTM_LOG");
    if (!env) return LogLevel::Warn;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    return LogLevel::Warn;
}

LogLevel g_level = level_from_env();

const char* tag(LogLevel level) {
    switch (level) {
        case LogLevel::Debug: return "debug";
        case LogLevel::Info: return "info";
        case LogLevel::Warn: return "warn";
        case LogLevel::Error: return "error";
    }
    return "?";
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }

LogLevel log_level() { return g_level; }

void log_msg(LogLevel level, const std::string& message) {
    if (level < g_level) return;
    std::fprintf(stderr, "[ctm %s] %s\n", tag(level), message.c_str());
}

}  // namespace ctm
