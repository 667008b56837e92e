#pragma once

#include <functional>
#include <string>

namespace taskframe {

// Non-fatal diagnostics. The default sink writes "warning: ..." to stderr.
using WarningSink = std::function<void(const std::string&)>;

void Warn(const std::string& message);
// Returns the previous sink. Pass nullptr to restore the default.
WarningSink SetWarningSink(WarningSink sink);

}  // namespace taskframe
