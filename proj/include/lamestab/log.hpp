#pragma once

#include <functional>
#include <string>

namespace lamestab {

using WarningHandler = std::function<void(const std::string&)>;

/// Replaces the sink for non-fatal diagnostics (default: stderr). Returns the
/// previous handler so callers can restore it.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace lamestab
