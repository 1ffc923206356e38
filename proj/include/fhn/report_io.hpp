#pragma once

#include <string>

#include <json.hpp>

namespace fhn {

/// Shortest 17-significant-digit representation; round-trips to the same
/// double. Uses the C locale ('.' decimal) regardless of environment.
std::string format_double(double v);

/// Writes content to path, creating parent directories. Throws
/// std::runtime_error on failure.
void write_text_file(const std::string& path, const std::string& content);

/// CSV payload prefixed with a '# <json>' configuration header line.
std::string with_config_header(const nlohmann::json& config,
                               const std::string& csv_body);

}  // namespace fhn
