#include "commitshield/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <regex>

#include <CLI11.hpp>

#include "commitshield/eval.hpp"

namespace commitshield {

namespace {

extern "C" void on_sigint(int) { interrupt_flag().store(true); }

// Installs the SIGINT handler for the lifetime of the object.
class InterruptScope {
public:
    InterruptScope()
    {
        interrupt_flag().store(false);
        m_previous = std::signal(SIGINT, on_sigint);
    }
    ~InterruptScope() { std::signal(SIGINT, m_previous); }

private:
    void (*m_previous)(int) = SIG_DFL;
};

struct Options {
    std::string config_path;
    std::string out_path;
    std::string format = "json";
    std::string url;
    std::string dataset;
    std::string replay;
    std::string save_reports;
    Settings flags;
};

void emit(const Options& opts, std::ostream& out, const std::string& text)
{
    if (opts.out_path.empty()) {
        out << text;
        if (text.empty() || text.back() != '\n')
            out << '\n';
        out.flush();
        return;
    }
    std::ofstream file(opts.out_path, std::ios::binary);
    if (!file)
        throw ConfigError("cannot write " + opts.out_path);
    file << text;
    if (text.empty() || text.back() != '\n')
        file << '\n';
}

std::shared_ptr<LlmBackend> make_backend(const CliConfig& config)
{
    if (config.llm.backend == BackendKind::mock) {
        try {
            return MockBackend::from_file(*config.llm.scenario_file);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    HttpBackendConfig http;
    http.endpoint_url = config.llm.endpoint;
    http.model = config.llm.model;
    http.identity = config.llm.identity;
    http.api_key = config.llm.api_key;
    http.max_in_flight = config.llm.max_in_flight;
    http.seed = config.llm.seed;
    return std::make_shared<HttpBackend>(std::move(http));
}

struct Runtime {
    CliConfig config;
    ForgeClient forge;
    RepoManager repos;
    std::shared_ptr<LlmBackend> backend;

    explicit Runtime(CliConfig c, bool with_llm)
        : config(std::move(c))
        , forge(config.forge)
        , repos(RepoConfig { config.workdir_root, config.clone_url_template })
        , backend(with_llm ? make_backend(config) : nullptr)
    {
    }

    PipelineContext context()
    {
        PipelineContext ctx { forge, repos, *backend };
        ctx.budget = config.budget;
        ctx.policy = config.policy;
        ctx.max_call_sites = config.max_call_sites;
        return ctx;
    }
};

CliConfig load_config(const Options& opts, const EnvLookup& env, bool needs_llm)
{
    std::optional<std::filesystem::path> file;
    if (!opts.config_path.empty())
        file = opts.config_path;
    Settings flags = opts.flags;
    // A scenario on the command line implies the mock backend.
    if (flags.count("llm.scenario_file") && !flags.count("llm.backend"))
        flags["llm.backend"] = "mock";
    CliConfig config = resolve_config(file, env, flags);
    if (needs_llm)
        config.validate();
    else {
        CliConfig check = config;
        check.llm.backend = BackendKind::http;
        check.llm.endpoint = check.llm.model = "unused";
        check.validate();
    }
    return config;
}

std::string render_metrics(const Options& opts, const MetricsReport& m)
{
    if (opts.format == "table")
        return metrics_table(m);
    return metrics_to_json(m).dump(2);
}

int do_eval(const std::string& task, const Options& opts, std::ostream& out, std::ostream& err, const EnvLookup& env)
{
    bool replay = !opts.replay.empty();
    CliConfig config = load_config(opts, env, !replay);
    MetricsReport metrics;
    if (task == "vfd") {
        auto samples = load_vfd_dataset(opts.dataset);
        if (replay) {
            std::vector<VfdPrediction> predictions;
            for (const auto& r : load_vfd_reports(opts.replay))
                predictions.push_back(prediction_of(r));
            metrics = score_vfd(predictions, samples);
        } else {
            Runtime rt(config, true);
            PipelineContext ctx = rt.context();
            EvalRunOptions run_opts;
            run_opts.concurrency = config.concurrency;
            run_opts.stop = &interrupt_flag();
            run_opts.on_error = [&](const std::string& m) { err << "warning: " << m << '\n'; };
            if (!opts.save_reports.empty())
                run_opts.report_dir = opts.save_reports;
            InterruptScope scope;
            VfdRun run = run_vfd_eval(samples, ctx, run_opts);
            metrics = score_vfd(run.predictions, run.finished);
            metrics.partial = run.interrupted;
        }
    } else {
        auto samples = load_vid_dataset(opts.dataset);
        if (replay) {
            metrics = score_vid(load_vid_reports(opts.replay), samples);
        } else {
            Runtime rt(config, true);
            PipelineContext ctx = rt.context();
            EvalRunOptions run_opts;
            run_opts.concurrency = config.concurrency;
            run_opts.stop = &interrupt_flag();
            run_opts.on_error = [&](const std::string& m) { err << "warning: " << m << '\n'; };
            if (!opts.save_reports.empty())
                run_opts.report_dir = opts.save_reports;
            InterruptScope scope;
            VidRun run = run_vid_eval(samples, ctx, config.vid, run_opts);
            metrics = score_vid(run.outcomes, run.finished);
            metrics.partial = run.interrupted;
        }
    }
    emit(opts, out, render_metrics(opts, metrics));
    if (metrics.partial) {
        err << "warning: interrupted; metrics cover " << metrics.samples << " finished samples only\n";
        return exit_analysis;
    }
    return exit_ok;
}

std::string lower(std::string s)
{
    for (auto& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace

std::atomic<bool>& interrupt_flag()
{
    static std::atomic<bool> flag { false };
    return flag;
}

CommitRef parse_commit_url(std::string_view url)
{
    static const std::regex web(R"(^https?://[^/\s]+/([^/\s]+)/([^/\s]+?)(?:\.git)?/commits?/([0-9A-Fa-f]{4,40})/?(?:[?#].*)?$)");
    static const std::regex shorthand(R"(^([^/\s@]+)/([^/\s@]+)@([0-9A-Fa-f]{4,40})$)");
    std::string text(url);
    std::smatch m;
    try {
        if (std::regex_match(text, m, web)) {
            CommitRef ref = validate_commit_ref(m[1].str() + "/" + m[2].str(), m[3].str());
            auto host_end = text.find('/', text.find("//") + 2);
            ref.web_url = text.substr(0, host_end) + "/" + ref.repo_slug + "/commit/" + ref.sha;
            return ref;
        }
        if (std::regex_match(text, m, shorthand))
            return validate_commit_ref(m[1].str() + "/" + m[2].str(), m[3].str());
    } catch (const MalformedSha& e) {
        throw MalformedUrl(text + ": " + e.what());
    } catch (const MalformedSlug& e) {
        throw MalformedUrl(text + ": " + e.what());
    }
    throw MalformedUrl("not a commit link or owner/repo@sha: " + text);
}

int exit_code_for(std::exception_ptr error)
{
    try {
        std::rethrow_exception(error);
    } catch (const StageFailed& e) {
        if (e.cause())
            return exit_code_for(e.cause());
        return exit_analysis;
    } catch (const ConfigError&) {
        return exit_usage;
    } catch (const MalformedUrl&) {
        return exit_usage;
    } catch (const RateLimited&) {
        return exit_network;
    } catch (const NetworkError&) {
        return exit_network;
    } catch (const OfflineMiss&) {
        return exit_network;
    } catch (const LlmError&) {
        return exit_network;
    } catch (const std::exception&) {
        return exit_analysis;
    } catch (...) {
        return exit_analysis;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const EnvLookup& env)
{
    Options opts;
    CLI::App app { "Vulnerability fix and introduction detection for commits", "commitshield" };
    app.require_subcommand(1);
    app.fallthrough();

    auto flag_setting = [&](const std::string& name, const std::string& key, const std::string& help) {
        app.add_option_function<std::string>(name, [&opts, key](const std::string& v) { opts.flags[key] = v; }, help);
    };
    app.add_option("--config", opts.config_path, "JSON config file");
    app.add_option("--out", opts.out_path, "write output to this file instead of stdout");
    app.add_option("--format", opts.format, "eval output format")->check(CLI::IsMember({ "json", "table" }));
    app.add_flag_callback("--offline", [&] { opts.flags["forge.offline"] = "true"; }, "use cached forge data only");
    app.add_flag_callback("--follow-renames", [&] { opts.flags["vid.follow_renames"] = "true"; }, "follow file renames in history");
    app.add_option_function<std::string>(
           "--llm", [&](const std::string& v) { opts.flags["llm.backend"] = v; }, "LLM backend")
        ->check(CLI::IsMember({ "http", "mock" }));
    flag_setting("--scenario", "llm.scenario_file", "mock backend scenario file");
    flag_setting("--endpoint", "llm.endpoint", "chat-completions URL");
    flag_setting("--model", "llm.model", "model name");
    flag_setting("--cache-dir", "forge.cache_dir", "forge cache directory");
    flag_setting("--api-base", "forge.api_base_url", "forge API base URL");
    flag_setting("--workdir", "workdir.root", "clone and worktree directory");
    flag_setting("--clone-url", "repo.clone_url_template", "clone URL template with {slug}");
    flag_setting("--concurrency", "run.concurrency", "parallel analyses in eval");
    flag_setting("--window", "vid.window", "commits judged after the first positive");
    flag_setting("--max-commits", "vid.max_commits", "candidate cap");
    flag_setting("--max-tokens", "budget.max_tokens", "prompt token budget");

    auto* fetch = app.add_subcommand("fetch", "fetch a commit into the cache and print it");
    fetch->add_option("commit", opts.url, "commit link or owner/repo@sha")->required();
    auto* vfd = app.add_subcommand("vfd", "decide whether a commit fixes a vulnerability");
    vfd->add_option("commit", opts.url, "commit link or owner/repo@sha")->required();
    auto* vid = app.add_subcommand("vid", "find the commits that introduced a fixed vulnerability");
    vid->add_option("commit", opts.url, "commit link or owner/repo@sha")->required();

    auto* eval = app.add_subcommand("eval", "score a labeled dataset");
    eval->require_subcommand(1);
    eval->fallthrough();
    auto* eval_vfd = eval->add_subcommand("vfd", "fix-detection dataset");
    auto* eval_vid = eval->add_subcommand("vid", "introduction dataset");
    for (auto* sub : { eval_vfd, eval_vid }) {
        sub->fallthrough();
        sub->add_option("--dataset", opts.dataset, "JSON-lines dataset")->required();
        sub->add_option("--replay", opts.replay, "score recorded reports from this directory");
        sub->add_option("--save-reports", opts.save_reports, "write each report to this directory");
    }

    auto* cache = app.add_subcommand("cache", "inspect or clear the forge cache");
    cache->require_subcommand(1);
    cache->fallthrough();
    auto* cache_stats = cache->add_subcommand("stats", "cache size");
    auto* cache_clear = cache->add_subcommand("clear", "delete cached entries");
    cache_stats->fallthrough();
    cache_clear->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*fetch) {
            CommitRef ref = parse_commit_url(opts.url);
            Runtime rt(load_config(opts, env, false), false);
            std::vector<std::string> warnings;
            CommitRecord record = run_stage("fetch", [&] { return rt.forge.fetch_enriched(ref, &warnings); });
            for (const auto& w : warnings)
                err << "warning: " << w << '\n';
            emit(opts, out, versioned(json(record)).dump(2));
            return exit_ok;
        }
        if (*vfd || *vid) {
            CommitRef ref = parse_commit_url(opts.url);
            Runtime rt(load_config(opts, env, true), true);
            PipelineContext ctx = rt.context();
            json report = *vfd ? json(detect_fix(ref, ctx)) : json(detect_introduction(ref, ctx, rt.config.vid));
            emit(opts, out, report.dump(2));
            return exit_ok;
        }
        if (*eval)
            return do_eval(*eval_vfd ? "vfd" : "vid", opts, out, err, env);
        if (*cache) {
            CliConfig config = load_config(opts, env, false);
            const auto& dir = config.forge.cache_dir;
            if (*cache_stats) {
                auto stats = ForgeClient::cache_stats(dir);
                emit(opts, out,
                    json { { "kind", "cache_stats" }, { "cache_dir", dir.string() }, { "files", stats.files },
                        { "bytes", stats.bytes } }
                        .dump(2));
            } else {
                auto stats = ForgeClient::cache_stats(dir);
                ForgeClient::clear_cache(dir);
                emit(opts, out,
                    json { { "kind", "cache_cleared" }, { "cache_dir", dir.string() }, { "files_removed", stats.files } }
                        .dump(2));
            }
            return exit_ok;
        }
    } catch (const std::exception& e) {
        int code = exit_code_for(std::current_exception());
        err << "error: " << e.what() << '\n';
        if (code == exit_network && lower(e.what()).find("token") != std::string::npos)
            err << "hint: set " << kForgeTokenEnv << " or run with --offline against a populated cache\n";
        return code;
    }
    return exit_usage;
}

} // namespace commitshield
