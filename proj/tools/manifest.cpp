#include "manifest.hpp"

#include "ctstack/util.hpp"

using nlohmann::json;

namespace ctstack::cli {

json make_manifest(const std::string& subcommand, const json& config,
                   const std::vector<std::filesystem::path>& inputs) {
  json input_list = json::array();
  for (const auto& path : inputs) {
    input_list.push_back({{"path", path.string()},
                          {"digest", "fnv1a64:" + to_hex(digest_tree(path))}});
  }
  return {{"tool", std::string(kToolName)},
          {"version", std::string(kToolVersion)},
          {"subcommand", subcommand},
          {"config", config},
          {"inputs", input_list}};
}

void write_manifest(const std::filesystem::path& file, const json& manifest) {
  write_file_atomic(file, manifest.dump(2) + "\n");
}

}  // namespace ctstack::cli
