#pragma once

#include <functional>
#include <string>
#include <vector>

namespace ffkm {

using WarningHandler = std::function<void(const std::string&)>;

/// Routes a non-fatal warning to the installed handler (stderr by default).
void warn(const std::string& message);

/// Installs a new handler and returns the previous one. An empty handler silences warnings.
WarningHandler set_warning_handler(WarningHandler handler);

/// RAII capture of warnings, mostly for tests and the CLI manifest.
class WarningCapture {
public:
    WarningCapture();
    ~WarningCapture();
    WarningCapture(const WarningCapture&) = delete;
    WarningCapture& operator=(const WarningCapture&) = delete;

    const std::vector<std::string>& messages() const { return messages_; }

private:
    std::vector<std::string> messages_;
    WarningHandler previous_;
};

}  // namespace ffkm
