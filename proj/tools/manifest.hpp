#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ctstack::cli {

/// Provenance record for one run: tool version, the effective config with
/// every default echoed, and digests of the inputs. Deterministic, so a
/// rerun over identical inputs produces an identical manifest.
nlohmann::json make_manifest(const std::string& subcommand,
                             const nlohmann::json& config,
                             const std::vector<std::filesystem::path>& inputs);

void write_manifest(const std::filesystem::path& file,
                    const nlohmann::json& manifest);

}  // namespace ctstack::cli
