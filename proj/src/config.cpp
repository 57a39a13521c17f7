#include "commitshield/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

namespace commitshield {

namespace {

const std::vector<std::pair<std::string, std::string>>& defaults_table()
{
    static const std::vector<std::pair<std::string, std::string>> table = [] {
        CliConfig c;
        return std::vector<std::pair<std::string, std::string>> {
            { "forge.api_base_url", c.forge.api_base_url },
            { "forge.token", "" },
            { "forge.cache_dir", c.forge.cache_dir.string() },
            { "forge.offline", "false" },
            { "forge.timeout_seconds", std::to_string(c.forge.request_timeout.count()) },
            { "forge.max_retries", std::to_string(c.forge.max_retries) },
            { "llm.backend", "http" },
            { "llm.endpoint", c.llm.endpoint },
            { "llm.model", c.llm.model },
            { "llm.identity", c.llm.identity },
            { "llm.scenario_file", "" },
            { "llm.key", "" },
            { "llm.max_in_flight", std::to_string(c.llm.max_in_flight) },
            { "llm.seed", std::to_string(c.llm.seed) },
            { "budget.max_tokens", std::to_string(c.budget.max_tokens) },
            { "budget.step_tokens", std::to_string(c.budget.step_tokens) },
            { "workdir.root", c.workdir_root.string() },
            { "repo.clone_url_template", c.clone_url_template },
            { "run.concurrency", std::to_string(c.concurrency) },
            { "policy.small_threshold", std::to_string(c.policy.small_threshold) },
            { "policy.large_threshold", std::to_string(c.policy.large_threshold) },
            { "vid.window", std::to_string(c.vid.window) },
            { "vid.max_commits", std::to_string(c.vid.max_commits) },
            { "vid.follow_renames", "false" },
            { "vid.max_patch_bytes", std::to_string(c.vid.max_patch_bytes) },
            { "analysis.max_call_sites", std::to_string(c.max_call_sites) },
        };
    }();
    return table;
}

bool known_key(const std::string& key)
{
    const auto& keys = config_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

void flatten(const json& node, const std::string& prefix, Settings& out)
{
    if (node.is_object()) {
        for (const auto& [k, v] : node.items())
            flatten(v, prefix.empty() ? k : prefix + "." + k, out);
        return;
    }
    if (!known_key(prefix))
        throw ConfigError("unknown config key \"" + prefix + "\"");
    if (node.is_string())
        out[prefix] = node.get<std::string>();
    else if (node.is_boolean() || node.is_number())
        out[prefix] = node.dump();
    else if (node.is_null())
        out[prefix] = "";
    else
        throw ConfigError("config key \"" + prefix + "\" must be a scalar");
}

long long parse_int(const Settings& s, const std::string& key, long long lo, long long hi)
{
    const std::string& text = s.at(key);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError(key + ": expected an integer, got \"" + text + "\"");
    if (value < lo || value > hi)
        throw ConfigError(key + ": " + text + " is out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return value;
}

bool parse_bool(const Settings& s, const std::string& key)
{
    std::string text = s.at(key);
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    if (text == "true" || text == "1" || text == "yes" || text == "on")
        return true;
    if (text == "false" || text == "0" || text == "no" || text == "off" || text.empty())
        return false;
    throw ConfigError(key + ": expected a boolean, got \"" + s.at(key) + "\"");
}

} // namespace

void CliConfig::validate() const
{
    if (concurrency < 1)
        throw ConfigError("run.concurrency must be at least 1");
    try {
        policy.validate();
        budget.validate();
        vid.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (llm.backend == BackendKind::mock && (!llm.scenario_file || llm.scenario_file->empty()))
        throw ConfigError("the mock backend requires a scenario file (--scenario or llm.scenario_file)");
    if (llm.backend == BackendKind::http && (llm.endpoint.empty() || llm.model.empty()))
        throw ConfigError("the http backend requires llm.endpoint and llm.model");
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [k, v] : defaults_table())
            out.push_back(k);
        return out;
    }();
    return keys;
}

std::string env_name(const std::string& key)
{
    std::string out = "COMMITSHIELD_";
    for (char c : key)
        out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

Settings default_settings()
{
    Settings out;
    for (const auto& [k, v] : defaults_table())
        out[k] = v;
    return out;
}

Settings settings_from_json(const json& document)
{
    if (!document.is_object())
        throw ConfigError("config file must hold a JSON object");
    Settings out;
    flatten(document, "", out);
    return out;
}

Settings settings_from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return settings_from_json(doc);
}

Settings settings_from_env(const EnvLookup& env)
{
    Settings out;
    for (const auto& key : config_keys()) {
        if (auto value = env(env_name(key)))
            out[key] = *value;
    }
    return out;
}

EnvLookup process_env()
{
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v)
            return std::nullopt;
        return std::string(v);
    };
}

Settings merge_settings(const std::vector<Settings>& layers)
{
    Settings out;
    for (const auto& layer : layers) {
        for (const auto& [k, v] : layer) {
            if (!known_key(k))
                throw ConfigError("unknown config key \"" + k + "\"");
            out[k] = v;
        }
    }
    return out;
}

CliConfig config_from_settings(const Settings& input)
{
    Settings s = merge_settings({ default_settings(), input });
    CliConfig c;
    c.forge.api_base_url = s.at("forge.api_base_url");
    if (!s.at("forge.token").empty())
        c.forge.auth_token = s.at("forge.token");
    c.forge.cache_dir = s.at("forge.cache_dir");
    c.forge.offline = parse_bool(s, "forge.offline");
    c.forge.request_timeout = std::chrono::seconds(parse_int(s, "forge.timeout_seconds", 1, 3600));
    c.forge.max_retries = static_cast<int>(parse_int(s, "forge.max_retries", 0, 100));

    const std::string& backend = s.at("llm.backend");
    if (backend == "http")
        c.llm.backend = BackendKind::http;
    else if (backend == "mock")
        c.llm.backend = BackendKind::mock;
    else
        throw ConfigError("llm.backend must be \"http\" or \"mock\", got \"" + backend + "\"");
    c.llm.endpoint = s.at("llm.endpoint");
    c.llm.model = s.at("llm.model");
    c.llm.identity = s.at("llm.identity");
    if (!s.at("llm.scenario_file").empty())
        c.llm.scenario_file = s.at("llm.scenario_file");
    c.llm.api_key = s.at("llm.key");
    c.llm.max_in_flight = static_cast<int>(parse_int(s, "llm.max_in_flight", 1, 256));
    c.llm.seed = static_cast<int>(parse_int(s, "llm.seed", 0, 1LL << 31));

    c.budget.max_tokens = static_cast<int>(parse_int(s, "budget.max_tokens", 1, 100'000'000));
    c.budget.step_tokens = static_cast<int>(parse_int(s, "budget.step_tokens", 1, 100'000'000));
    c.workdir_root = s.at("workdir.root");
    c.clone_url_template = s.at("repo.clone_url_template");
    c.concurrency = static_cast<int>(parse_int(s, "run.concurrency", 1, 256));
    c.policy.small_threshold = static_cast<int>(parse_int(s, "policy.small_threshold", 0, 1'000'000));
    c.policy.large_threshold = static_cast<int>(parse_int(s, "policy.large_threshold", 0, 1'000'000));
    c.vid.window = static_cast<int>(parse_int(s, "vid.window", 0, 1'000'000));
    c.vid.max_commits = static_cast<int>(parse_int(s, "vid.max_commits", 1, 10'000'000));
    c.vid.follow_renames = parse_bool(s, "vid.follow_renames");
    c.vid.max_patch_bytes = static_cast<std::size_t>(parse_int(s, "vid.max_patch_bytes", 1, 1LL << 40));
    c.max_call_sites = static_cast<std::size_t>(parse_int(s, "analysis.max_call_sites", 1, 1'000'000));
    return c;
}

CliConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env, const Settings& flags)
{
    std::vector<Settings> layers { default_settings() };
    if (file)
        layers.push_back(settings_from_file(*file));
    layers.push_back(settings_from_env(env));
    layers.push_back(flags);
    return config_from_settings(merge_settings(layers));
}

} // namespace commitshield
