#pragma once

// Minimal stderr logger. The GRIDMESH_LOG environment variable selects the
// level: error, warn (default), info, debug.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace gridmesh::logging {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level& threshold() {
    static Level lvl = [] {
        const char* env = std::getenv("GRIDMESH_LOG");
        if (env == nullptr) return Level::warn;
        if (std::strcmp(env, "error") == 0) return Level::error;
        if (std::strcmp(env, "info") == 0) return Level::info;
        if (std::strcmp(env, "debug") == 0) return Level::debug;
        return Level::warn;
    }();
    return lvl;
}

inline void write(Level lvl, const std::string& msg) {
    if (lvl > threshold()) return;
    static const char* tags[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "[gridmesh %s] %s\n", tags[static_cast<int>(lvl)], msg.c_str());
}

inline void error(const std::string& msg) { write(Level::error, msg); }
inline void warn(const std::string& msg) { write(Level::warn, msg); }
inline void info(const std::string& msg) { write(Level::info, msg); }
inline void debug(const std::string& msg) { write(Level::debug, msg); }

} // namespace gridmesh::logging
