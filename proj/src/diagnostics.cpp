#include "ffkm/diagnostics.hpp"

#include <iostream>
#include <mutex>

namespace ffkm {

namespace {

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& handler() {
    static WarningHandler h = [](const std::string& message) {
        std::cerr << "warning: " << message << '\n';
    };
    return h;
}

}  // namespace

void warn(const std::string& message) {
    std::lock_guard lock(handler_mutex());
    if (handler()) {
        handler()(message);
    }
}

WarningHandler set_warning_handler(WarningHandler h) {
    std::lock_guard lock(handler_mutex());
    std::swap(handler(), h);
    return h;
}

WarningCapture::WarningCapture() {
    previous_ = set_warning_handler([this](const std::string& m) { messages_.push_back(m); });
}

WarningCapture::~WarningCapture() { set_warning_handler(std::move(previous_)); }

}  // namespace ffkm
