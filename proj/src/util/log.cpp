#include "xdhs/util/log.hpp"

#include <iostream>
#include <mutex>

namespace xdhs::log {

namespace {
std::mutex sink_mutex;
Sink current_sink;
} // namespace

Sink set_warning_sink(Sink sink) {
    std::lock_guard lock(sink_mutex);
    std::swap(sink, current_sink);
    return sink;
}

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex);
    if (current_sink)
        current_sink(message);
    else
        std::cerr << "warning: " << message << '\n';
}

} // namespace xdhs::log
