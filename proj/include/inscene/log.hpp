#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace inscene {

// One-line key=value logging, greppable and stable.
inline void log_kv(const std::string& event,
                   const std::vector<std::pair<std::string, std::string>>& kvs = {}) {
    std::string line = "inscene event=" + event;
    for (const auto& [k, v] : kvs) {
        line += " " + k + "=" + v;
    }
    std::fprintf(stdout, "%s\n", line.c_str());
    std::fflush(stdout);
}

} // namespace inscene
