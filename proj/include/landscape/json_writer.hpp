#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include <json.hpp>

namespace landscape {

/// "%.17g"; non-finite values become "null".
std::string format_double(double value);

/**
 * Serializes @p value with two-space indentation, object keys in the order
 * held by @p value, and every floating-point number written with 17
 * significant digits, so equal inputs always produce byte-identical text.
 */
void write_json(std::ostream& out, const nlohmann::ordered_json& value);
void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& value);

}  // namespace landscape
