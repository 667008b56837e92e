#pragma once

#include <string>
#include <string_view>

namespace taskframe {

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view bytes);
// Throws kInvalidInput if the file cannot be read.
std::string Sha256File(const std::string& path);

}  // namespace taskframe
