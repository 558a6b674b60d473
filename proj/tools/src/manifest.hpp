#pragma once

#include "commands.hpp"

#include <json.hpp>

#include <filesystem>
#include <string_view>

namespace evseg::cli {

using Json = nlohmann::ordered_json;

/// Common manifest fields: tool, version, command, argv, start time.
Json manifest_header(const Context& ctx, std::string_view command);

void write_json(const std::filesystem::path& path, const Json& doc);
Json read_json(const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace evseg::cli
