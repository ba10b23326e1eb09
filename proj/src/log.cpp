#include "utabc/log.hpp"

#include <atomic>
#include <iostream>

namespace utabc::log {

namespace {
std::atomic<Level> current{Level::warning};
}

void set_level(Level l) { current.store(l); }
Level level() { return current.load(); }

void warn(std::string_view message) {
    if (current.load() >= Level::warning) std::cerr << "[utabc] warning: " << message << '\n';
}

void info(std::string_view message) {
    if (current.load() >= Level::info) std::cerr << "[utabc] " << message << '\n';
}

}  // namespace utabc::log
