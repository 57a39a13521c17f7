#include <doctest.h>

#include <algorithm>

#include "commitshield/vfd.hpp"
#include "fixture.hpp"

using namespace commitshield;

namespace {

const char* kSlug = "o/media";

const char* kAviBefore = R"(#include "avi.h"

static int g_limit = 10;

int avi_read(AVI *avi, char *buf, int n)
{
    avi->video_pos++;
    return fread(buf, 1, n, avi->fp);
}

int avi_first(AVI *avi)
{
    char b[4];
    return avi_read(avi, b, 4);
}
)";

const char* kAviFixed = R"(#include "avi.h"

static int g_limit = 10;

int avi_read(AVI *avi, char *buf, int n)
{
    if (n > g_limit)
        return -1;
    avi->video_pos++;
    return fread(buf, 1, n, avi->fp);
}

int avi_first(AVI *avi)
{
    char b[4];
    return avi_read(avi, b, 4);
}
)";

const char* kUtil = R"(#include "avi.h"

void dump(AVI *avi)
{
    char line[80];
    while (avi_read(avi, line, 80) > 0)
        puts(line);
}
)";

struct Repo {
    cstest::Workspace ws;
    cstest::GitRepo origin = ws.make_repo(kSlug);
    std::string base;
    std::string fix;
    std::string added;
    std::string global;

    Repo()
    {
        base = origin.commit({ { "src/avi.c", kAviBefore }, { "src/util.c", kUtil }, { "README.md", "media\n" } }, "import");
        fix = origin.commit({ { "src/avi.c", kAviFixed }, { "README.md", "media tools\n" } }, "avi: check read length");
        added = origin.commit({ { "src/extra.c", "int extra(void)\n{\n    return 1;\n}\n" } }, "add extra");
        std::string limited = kAviFixed;
        limited.replace(limited.find("= 10"), 4, "= 8");
        global = origin.commit({ { "src/avi.c", limited } }, "lower limit");
        cstest::seed_forge_cache(ws.cache_dir(), kSlug, origin, { base, fix, added, global });
    }

    CommitRef ref(const std::string& sha) const { return validate_commit_ref(kSlug, sha); }
};

json yes(const std::string& why = "yes") { return { { "result", "yes" }, { "analysis", why } }; }
json no(const std::string& why = "no") { return { { "result", "no" }, { "analysis", why } }; }

std::vector<std::string> kinds(const VfdReport& r)
{
    std::vector<std::string> out;
    for (const auto& e : r.prompt_log)
        out.push_back(to_string(e.kind));
    return out;
}

bool flagged(const VfdReport& r, Limitation l)
{
    return std::find(r.limitations.begin(), r.limitations.end(), l) != r.limitations.end();
}

} // namespace

TEST_CASE("inter-procedural fix collects callers from the parent revision")
{
    Repo repo;
    json scenario = {
        { "describe:" + repo.fix, "Bounds check on the read length." },
        { "relevance:" + repo.fix + ":src/avi.c", yes() },
        { "relevance:" + repo.fix + ":README.md", no() },
        { "scope:" + repo.fix, { { "result", "inter" }, { "analysis", "return value reaches callers" } } },
        { "vfd_final:" + repo.fix, yes("overflow") },
    };
    cstest::Pipeline p(repo.ws, scenario);
    VfdReport r = detect_fix(repo.ref(repo.fix), p.ctx);

    CHECK(r.verdict.yes());
    CHECK(r.verdict.analysis == "overflow");
    CHECK(r.description == "Bounds check on the read length.");
    CHECK(r.relevant_patches == std::vector<std::string> { "src/avi.c" });
    REQUIRE(r.scope_results.size() == 1);
    CHECK(r.scope_results[0].classification == ScopeClass::inter);
    REQUIRE(r.scope_results[0].functions.size() == 1);
    CHECK(r.scope_results[0].functions[0].name == "avi_read");
    CHECK(r.scope_results[0].functions[0].start_line == 5);
    CHECK(r.scope_results[0].functions[0].end_line == 9);

    std::vector<std::pair<std::string, int>> sites;
    for (const auto& c : r.call_contexts)
        sites.emplace_back(c.file, c.line);
    std::sort(sites.begin(), sites.end());
    CHECK(sites == std::vector<std::pair<std::string, int>> { { "src/avi.c", 14 }, { "src/util.c", 6 } });
    for (const auto& c : r.call_contexts) {
        REQUIRE(c.caller);
        CHECK((c.caller->name == "avi_first" || c.caller->name == "dump"));
    }
    CHECK(kinds(r) == std::vector<std::string> { "describe", "relevance", "relevance", "scope", "vfd_final" });
    CHECK(r.limitations.empty());

    // The report survives a JSON round trip.
    json j = r;
    CHECK(j["kind"] == "vfd_report");
    VfdReport back = j.get<VfdReport>();
    CHECK(json(back) == j);
}

TEST_CASE("intra-procedural fixes carry function bodies and no call sites")
{
    Repo repo;
    json scenario = {
        { "relevance:*", yes() },
        { "scope:*", { { "result", "intra" }, { "analysis", "local" } } },
        { "vfd_final:*", no("hardening") },
    };
    cstest::Pipeline p(repo.ws, scenario);
    VfdReport r = detect_fix(repo.ref(repo.fix), p.ctx);
    CHECK_FALSE(r.verdict.yes());
    CHECK(r.call_contexts.empty());
    // README is kept but is not C: analysed from the raw patch.
    CHECK(r.relevant_patches.size() == 2);
    CHECK(flagged(r, Limitation::non_function_change));
    auto intra = std::find_if(r.scope_results.begin(), r.scope_results.end(),
        [](const ScopeAnalysis& s) { return s.path == "src/avi.c"; });
    REQUIRE(intra != r.scope_results.end());
    CHECK(intra->classification == ScopeClass::intra);
}

TEST_CASE("relevance fallback keeps every patch")
{
    Repo repo;
    cstest::Pipeline p(repo.ws, json::object());
    VfdReport r = detect_fix(repo.ref(repo.fix), p.ctx);
    CHECK(flagged(r, Limitation::relevance_fallback));
    CHECK(r.relevant_patches.size() == 2);
    CHECK_FALSE(r.verdict.yes());
    CHECK(r.verdict.analysis == "default");
}

TEST_CASE("new files and file-scope edits are flagged, not fatal")
{
    Repo repo;
    json scenario = { { "relevance:*", yes() }, { "vfd_final:*", yes() } };
    {
        cstest::Pipeline p(repo.ws, scenario);
        VfdReport r = detect_fix(repo.ref(repo.added), p.ctx);
        CHECK(r.verdict.yes());
        CHECK(flagged(r, Limitation::new_file_no_parent));
        REQUIRE(r.scope_results.size() == 1);
        CHECK(r.scope_results[0].classification == ScopeClass::file_scope);
    }
    {
        cstest::Pipeline p(repo.ws, scenario);
        VfdReport r = detect_fix(repo.ref(repo.global), p.ctx);
        CHECK(flagged(r, Limitation::non_function_change));
        CHECK(r.scope_results[0].functions.empty());
        // No scope prompt for a change outside functions.
        auto sent = kinds(r);
        CHECK(std::count(sent.begin(), sent.end(), "scope") == 0);
    }
}

TEST_CASE("fetch failures abort with the stage and cause")
{
    Repo repo;
    cstest::Pipeline p(repo.ws, json::object());
    auto unknown = validate_commit_ref(kSlug, std::string(40, 'a'));
    try {
        detect_fix(unknown, p.ctx);
        FAIL("expected StageFailed");
    } catch (const StageFailed& e) {
        CHECK(e.stage() == "fetch");
        CHECK_THROWS_AS(std::rethrow_exception(e.cause()), OfflineMiss);
    }
}

TEST_CASE("tiny budgets flag truncation and impossible budgets abort")
{
    Repo repo;
    cstest::Pipeline p(repo.ws, json { { "relevance:*", yes() }, { "describe:*", std::string(6000, 'd') } });
    p.ctx.budget.max_tokens = 1200;
    p.ctx.budget.step_tokens = 100;
    VfdReport r = detect_fix(repo.ref(repo.fix), p.ctx);
    CHECK(flagged(r, Limitation::budget_truncated));

    cstest::Pipeline q(repo.ws, json::object());
    q.ctx.budget.max_tokens = 50;
    CHECK_THROWS_AS(detect_fix(repo.ref(repo.fix), q.ctx), StageFailed);
}
