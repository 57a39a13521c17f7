#include <doctest.h>

#include "corpus.hpp"

using namespace commitshield;

namespace {

std::set<std::pair<std::string, int>> as_set(const CallSiteScan& scan)
{
    std::set<std::pair<std::string, int>> out;
    for (const auto& s : scan.sites)
        out.insert({ s.file, s.line });
    return out;
}

std::string describe(const std::set<std::pair<std::string, int>>& s)
{
    std::string out;
    for (const auto& [f, l] : s)
        out += f + ":" + std::to_string(l) + " ";
    return out;
}

} // namespace

TEST_CASE("call sites agree with the textual oracle on the fixture")
{
    auto files = cstest::call_site_fixture();
    for (const auto& callee : cstest::call_site_callees()) {
        CAPTURE(callee);
        auto expected = cstest::textual_call_oracle(files, callee);
        auto got = as_set(find_call_sites(files, callee));
        CHECK_MESSAGE(got == expected, "analyzer: " << describe(got) << " oracle: " << describe(expected));
    }
}

TEST_CASE("oracle sanity on hand-counted cases")
{
    auto files = cstest::call_site_fixture();
    auto grow = cstest::textual_call_oracle(files, "buf_grow");
    CHECK(grow.count({ "include/buf.h", 18 }) == 1);
    CHECK(grow.count({ "src/buf.c", 4 }) == 0);
    CHECK(grow.count({ "docs/notes.md", 1 }) == 0);
    CHECK(cstest::textual_call_oracle(files, "never_called").empty());
    auto handler = cstest::textual_call_oracle(files, "handler");
    CHECK(handler == std::set<std::pair<std::string, int>> { { "src/handlers.c", 16 }, { "src/init.c", 15 } });
}

TEST_CASE("results are ordered by path then line and are repeatable")
{
    auto files = cstest::call_site_fixture();
    auto a = find_call_sites(files, "checked_len");
    auto b = find_call_sites(files, "checked_len");
    REQUIRE(a.sites.size() == b.sites.size());
    for (std::size_t i = 0; i < a.sites.size(); ++i) {
        CHECK(a.sites[i].file == b.sites[i].file);
        CHECK(a.sites[i].line == b.sites[i].line);
        if (i > 0)
            CHECK(std::make_pair(a.sites[i - 1].file, a.sites[i - 1].line) < std::make_pair(a.sites[i].file, a.sites[i].line));
        CHECK(a.sites[i].context_lines.size() <= 2 * kCallContextRadius + 1);
    }
}
