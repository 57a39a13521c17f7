// Layered settings for the command-line tool: flags > environment > file > defaults.
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "commitshield/forge.hpp"
#include "commitshield/llm.hpp"
#include "commitshield/vid.hpp"

namespace commitshield {

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class BackendKind { http, mock };

struct LlmSettings {
    BackendKind backend = BackendKind::http;
    std::string endpoint = "https://api.deepseek.com/chat/completions";
    std::string model = "deepseek-chat";
    std::string identity = "deepseek";
    std::optional<std::filesystem::path> scenario_file;
    std::string api_key;
    int max_in_flight = 4;
    int seed = 0;
};

struct CliConfig {
    ForgeConfig forge;
    LlmSettings llm;
    TokenBudget budget;
    std::filesystem::path workdir_root = ".commitshield-work";
    std::string clone_url_template = "https://github.com/{slug}.git";
    int concurrency = 1;
    ContextExtensionPolicy policy;
    VidOptions vid;
    std::size_t max_call_sites = 100;

    /// Checks ranges and the backend requirements.
    void validate() const;
};

// Dotted key ("llm.model") to raw string value.
using Settings = std::map<std::string, std::string>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Every recognised key in dotted form.
const std::vector<std::string>& config_keys();
/// COMMITSHIELD_<SECTION>_<KEY>, e.g. llm.key -> COMMITSHIELD_LLM_KEY.
std::string env_name(const std::string& key);

Settings default_settings();
/// Flattens a JSON config document; unknown keys are rejected.
Settings settings_from_json(const json& document);
Settings settings_from_file(const std::filesystem::path& path);
Settings settings_from_env(const EnvLookup& env);
EnvLookup process_env();

/// Later layers override earlier ones.
Settings merge_settings(const std::vector<Settings>& layers);
CliConfig config_from_settings(const Settings& settings);

CliConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env, const Settings& flags);

} // namespace commitshield
