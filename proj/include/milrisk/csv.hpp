#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace milrisk::csv {

/// Split one unquoted CSV line; a trailing '\r' is dropped.
std::vector<std::string> split(std::string_view line);

std::string trim(std::string_view s);

}  // namespace milrisk::csv
