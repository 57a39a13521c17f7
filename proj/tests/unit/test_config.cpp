#include <doctest.h>

#include <functional>

#include "commitshield/config.hpp"
#include "fixture.hpp"

using namespace commitshield;

namespace {

struct KeyProbe {
    // Three distinct valid values, for file, environment and flag layers.
    std::array<std::string, 3> values;
    std::function<std::string(const CliConfig&)> read;
};

std::string num(long long v) { return std::to_string(v); }

std::map<std::string, KeyProbe> probes()
{
    return {
        { "forge.api_base_url", { { "http://f1", "http://f2", "http://f3" }, [](const CliConfig& c) { return c.forge.api_base_url; } } },
        { "forge.token", { { "t1", "t2", "t3" }, [](const CliConfig& c) { return c.forge.auth_token.value_or(""); } } },
        { "forge.cache_dir", { { "/c1", "/c2", "/c3" }, [](const CliConfig& c) { return c.forge.cache_dir.string(); } } },
        { "forge.offline", { { "true", "false", "true" }, [](const CliConfig& c) { return std::string(c.forge.offline ? "true" : "false"); } } },
        { "forge.timeout_seconds", { { "11", "12", "13" }, [](const CliConfig& c) { return num(c.forge.request_timeout.count()); } } },
        { "forge.max_retries", { { "1", "2", "3" }, [](const CliConfig& c) { return num(c.forge.max_retries); } } },
        { "llm.backend", { { "mock", "http", "mock" }, [](const CliConfig& c) { return std::string(c.llm.backend == BackendKind::mock ? "mock" : "http"); } } },
        { "llm.endpoint", { { "http://e1", "http://e2", "http://e3" }, [](const CliConfig& c) { return c.llm.endpoint; } } },
        { "llm.model", { { "m1", "m2", "m3" }, [](const CliConfig& c) { return c.llm.model; } } },
        { "llm.identity", { { "i1", "i2", "i3" }, [](const CliConfig& c) { return c.llm.identity; } } },
        { "llm.scenario_file", { { "s1.json", "s2.json", "s3.json" }, [](const CliConfig& c) { return c.llm.scenario_file ? c.llm.scenario_file->string() : ""; } } },
        { "llm.key", { { "k1", "k2", "k3" }, [](const CliConfig& c) { return c.llm.api_key; } } },
        { "llm.max_in_flight", { { "5", "6", "7" }, [](const CliConfig& c) { return num(c.llm.max_in_flight); } } },
        { "llm.seed", { { "21", "22", "23" }, [](const CliConfig& c) { return num(c.llm.seed); } } },
        { "budget.max_tokens", { { "1000", "2000", "3000" }, [](const CliConfig& c) { return num(c.budget.max_tokens); } } },
        { "budget.step_tokens", { { "10", "20", "30" }, [](const CliConfig& c) { return num(c.budget.step_tokens); } } },
        { "workdir.root", { { "/w1", "/w2", "/w3" }, [](const CliConfig& c) { return c.workdir_root.string(); } } },
        { "repo.clone_url_template", { { "u1/{slug}", "u2/{slug}", "u3/{slug}" }, [](const CliConfig& c) { return c.clone_url_template; } } },
        { "run.concurrency", { { "2", "3", "4" }, [](const CliConfig& c) { return num(c.concurrency); } } },
        { "policy.small_threshold", { { "5", "6", "7" }, [](const CliConfig& c) { return num(c.policy.small_threshold); } } },
        { "policy.large_threshold", { { "31", "32", "33" }, [](const CliConfig& c) { return num(c.policy.large_threshold); } } },
        { "vid.window", { { "1", "2", "3" }, [](const CliConfig& c) { return num(c.vid.window); } } },
        { "vid.max_commits", { { "41", "42", "43" }, [](const CliConfig& c) { return num(c.vid.max_commits); } } },
        { "vid.follow_renames", { { "true", "false", "true" }, [](const CliConfig& c) { return std::string(c.vid.follow_renames ? "true" : "false"); } } },
        { "vid.max_patch_bytes", { { "100", "200", "300" }, [](const CliConfig& c) { return num(static_cast<long long>(c.vid.max_patch_bytes)); } } },
        { "analysis.max_call_sites", { { "7", "8", "9" }, [](const CliConfig& c) { return num(static_cast<long long>(c.max_call_sites)); } } },
    };
}

// Nests a dotted key into a JSON document.
json nested(const std::string& key, const std::string& value)
{
    auto dot = key.find('.');
    return json { { key.substr(0, dot), { { key.substr(dot + 1), value } } } };
}

} // namespace

TEST_CASE("every key has a probe and an environment name")
{
    auto p = probes();
    CHECK(p.size() == config_keys().size());
    for (const auto& key : config_keys())
        CHECK(p.count(key) == 1);
    CHECK(env_name("forge.token") == "COMMITSHIELD_FORGE_TOKEN");
    CHECK(env_name("llm.key") == "COMMITSHIELD_LLM_KEY");
    CHECK(env_name("vid.max_commits") == "COMMITSHIELD_VID_MAX_COMMITS");
}

TEST_CASE("precedence per key: flags over environment over file over defaults")
{
    CliConfig defaults = config_from_settings({});
    cstest::TempDir dir("cfg");
    for (const auto& [key, probe] : probes()) {
        for (int mask = 0; mask < 8; ++mask) {
            bool in_file = mask & 1;
            bool in_env = mask & 2;
            bool in_flag = mask & 4;
            CAPTURE(key);
            CAPTURE(mask);
            std::optional<std::filesystem::path> file;
            if (in_file) {
                file = dir.path() / "c.json";
                cstest::write_text(*file, nested(key, probe.values[0]).dump());
            }
            std::string var = env_name(key);
            EnvLookup env = [&](const std::string& name) -> std::optional<std::string> {
                if (in_env && name == var)
                    return probe.values[1];
                return std::nullopt;
            };
            Settings flags;
            if (in_flag)
                flags[key] = probe.values[2];
            std::string expected = in_flag ? probe.values[2] : in_env ? probe.values[1] : in_file ? probe.values[0] : probe.read(defaults);
            CliConfig c = resolve_config(file, env, flags);
            CHECK(probe.read(c) == expected);
        }
    }
}

TEST_CASE("file values may be JSON numbers and booleans")
{
    json doc = { { "vid", { { "window", 4 }, { "follow_renames", true } } }, { "forge", { { "offline", false } } } };
    CliConfig c = config_from_settings(settings_from_json(doc));
    CHECK(c.vid.window == 4);
    CHECK(c.vid.follow_renames);
    CHECK_FALSE(c.forge.offline);
}

TEST_CASE("defaults")
{
    CliConfig c = config_from_settings({});
    CHECK(c.vid.window == 10);
    CHECK(c.vid.max_commits == 500);
    CHECK_FALSE(c.vid.follow_renames);
    CHECK(c.budget.max_tokens == 130000);
    CHECK(c.llm.backend == BackendKind::http);
    CHECK_FALSE(c.forge.auth_token);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("bad configuration is reported as ConfigError")
{
    CHECK_THROWS_AS(settings_from_json(json { { "llm", { { "modle", "x" } } } }), ConfigError);
    CHECK_THROWS_AS(settings_from_json(json { { "vid", { { "window", json::array() } } } }), ConfigError);
    CHECK_THROWS_AS(settings_from_json(json::array()), ConfigError);
    CHECK_THROWS_AS(config_from_settings({ { "vid.window", "ten" } }), ConfigError);
    CHECK_THROWS_AS(config_from_settings({ { "vid.max_commits", "0" } }), ConfigError);
    CHECK_THROWS_AS(config_from_settings({ { "forge.offline", "maybe" } }), ConfigError);
    CHECK_THROWS_AS(config_from_settings({ { "llm.backend", "grpc" } }), ConfigError);

    cstest::TempDir dir("cfg");
    cstest::write_text(dir.path() / "broken.json", "{ not json");
    CHECK_THROWS_AS(settings_from_file(dir.path() / "broken.json"), ConfigError);
    CHECK_THROWS_AS(settings_from_file(dir.path() / "missing.json"), ConfigError);

    CliConfig mock = config_from_settings({ { "llm.backend", "mock" } });
    CHECK_THROWS_AS(mock.validate(), ConfigError);
    CliConfig http = config_from_settings({ { "llm.model", "" } });
    CHECK_THROWS_AS(http.validate(), ConfigError);
    CliConfig policy = config_from_settings({ { "policy.small_threshold", "40" }, { "policy.large_threshold", "30" } });
    CHECK_THROWS_AS(policy.validate(), ConfigError);
}
