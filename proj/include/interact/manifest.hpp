#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace interact {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Provenance block embedded in every CLI output.
struct RunManifest {
    std::string command;
    /// Hex SHA-256 of the input bytes; empty for commands without input.
    std::string input_digest;
    nlohmann::json spec = nlohmann::json::object();
    std::optional<std::uint64_t> seed;
    std::string tool_version{kToolVersion};
    std::string timestamp;
};

std::string sha256_hex(std::string_view data);

/// UTC ISO-8601 time. Honors SOURCE_DATE_EPOCH so repeated runs can be made
/// byte-identical.
std::string run_timestamp();

nlohmann::json to_json(const RunManifest& manifest);

}  // namespace interact
