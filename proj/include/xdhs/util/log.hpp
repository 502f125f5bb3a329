#pragma once

#include <functional>
#include <string>

namespace xdhs::log {

using Sink = std::function<void(const std::string&)>;

// Warnings go to stderr unless a sink is installed. Returns the previous sink.
Sink set_warning_sink(Sink sink);
void warn(const std::string& message);

// Installs a sink for the lifetime of the object.
class ScopedWarningSink {
public:
    explicit ScopedWarningSink(Sink sink) : previous_(set_warning_sink(std::move(sink))) {}
    ~ScopedWarningSink() { set_warning_sink(std::move(previous_)); }
    ScopedWarningSink(const ScopedWarningSink&) = delete;
    ScopedWarningSink& operator=(const ScopedWarningSink&) = delete;

private:
    Sink previous_;
};

} // namespace xdhs::log
