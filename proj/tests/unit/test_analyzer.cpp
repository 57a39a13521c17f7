#include <doctest.h>

#include <algorithm>

#include "commitshield/analyzer.hpp"
#include "fixture.hpp"

using namespace commitshield;

namespace {

const char* kAvi = R"(#include <stdio.h>
#include "avi.h"

static int g_limit = 10;

static int avi_read(AVI *AVI, char *buf, int n)
{
    int tmp = n + 1;
    if (n > g_limit)
        return -1;
    AVI->video_pos++;
    return fread(buf, 1, n, AVI->fp);
}

int other(void)
{
    char b[4];
    return avi_read(0, b, 4);
}
)";

ChangeLines deleted_line(int lineno, const std::string& text)
{
    ChangeLines c;
    c.deleted.push_back({ lineno, text });
    return c;
}

} // namespace

TEST_CASE("placement of body lines and directives")
{
    auto r = place_lines(kAvi, Language::c, { 1, 4, 6, 8, 13, 14, 18 });
    REQUIRE(r.placements.size() == 7);
    CHECK(r.placements[0].placement == Placement::file_scope);
    CHECK(r.placements[1].placement == Placement::file_scope);
    CHECK(r.placements[2].placement == Placement::in_function);
    CHECK(r.placements[2].function->name == "avi_read");
    CHECK(r.placements[2].function->start_line == 6);
    CHECK(r.placements[2].function->end_line == 13);
    CHECK(r.placements[3].function->name == "avi_read");
    CHECK(r.placements[4].placement == Placement::in_function);
    CHECK(r.placements[5].placement == Placement::file_scope);
    CHECK(r.placements[6].function->name == "other");
    CHECK(r.placements[6].function->body_text.rfind("int other(void)\n", 0) == 0);
    CHECK_FALSE(r.degraded);
}

TEST_CASE("a function spanning lines 10 to 40 contains line 15")
{
    std::string src;
    for (int i = 1; i < 10; ++i)
        src += "\n";
    src += "void big(void)\n{\n";
    for (int i = 12; i < 40; ++i)
        src += "    step();\n";
    src += "}\n";
    auto r = place_lines(src, Language::c, { 15 });
    REQUIRE(r.placements[0].function);
    CHECK(r.placements[0].function->start_line == 10);
    CHECK(r.placements[0].function->end_line == 40);
}

TEST_CASE("methods are qualified by their class")
{
    const char* src = "class Parser {\npublic:\n    int next() {\n        return pos_++;\n    }\nprivate:\n    int pos_ = 0;\n};\n";
    auto r = place_lines(src, Language::cpp, { 4, 7 });
    REQUIRE(r.placements[0].function);
    CHECK(r.placements[0].function->name == "Parser::next");
    CHECK(r.placements[1].placement == Placement::file_scope);
}

TEST_CASE("out-of-range lines and unsupported languages are rejected")
{
    CHECK_THROWS(place_lines("int a;\n", Language::c, { 2 }));
    CHECK_THROWS(place_lines("int a;\n", Language::c, { 0 }));
    CHECK_THROWS(place_lines("x = 1\n", Language::other, { 1 }));
}

TEST_CASE("unbalanced braces give best-effort placements and a warning")
{
    auto r = place_lines("void f(void)\n{\n    if (x) {\n        y();\n", Language::c, { 4 });
    CHECK(r.degraded);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("function name capture")
{
    CHECK(capture_function_name("static int avi_read(AVI *AVI, char *buf, int n)", Language::c) == "avi_read");
    CHECK(capture_function_name("void A::f() const", Language::cpp) == "A::f");
    CHECK(capture_function_name("unsigned long long *make_table(size_t n)", Language::c) == "make_table");
    CHECK(capture_function_name("bool operator==(const A& o) const", Language::cpp, 1, "A") == "A::operator==");
    try {
        capture_function_name("DEFINE_HANDLER(x)", Language::c, 7);
        FAIL("expected NameNotFound");
    } catch (const NameNotFound& e) {
        CHECK(e.placeholder() == "<unnamed@7>");
    }
    CHECK(function_name_or_placeholder("DEFINE_HANDLER(x)", Language::c, 3) == "<unnamed@3>");
}

TEST_CASE("call sites exclude definitions, prototypes and non-call uses")
{
    std::vector<SourceFile> files {
        { "a.c", "int handler(int);\nint handler(int x)\n{\n    return x;\n}\n" },
        { "b.c",
            "int handler(int);\nvoid run(void)\n{\n    int (*cb)(int) = handler;\n    register_cb(handler);\n    "
            "handler(3);\n}\n" },
        { "c.c", "struct s { int handler; };\nvoid use(struct s *p)\n{\n    p->handler = 1;\n    if (p->handler) go();\n}\n" },
        { "d.c", "/* handler(1) */\nconst char *n = \"handler(2)\";\n" },
    };
    auto scan = find_call_sites(files, "handler");
    REQUIRE(scan.sites.size() == 1);
    CHECK(scan.sites[0].file == "b.c");
    CHECK(scan.sites[0].line == 6);
    REQUIRE(scan.sites[0].caller);
    CHECK(scan.sites[0].caller->name == "run");
    CHECK(scan.non_call_references >= 2);
    CHECK(find_call_sites(files, "never_called").sites.empty());
}

TEST_CASE("call sites in two files carry caller names and context")
{
    std::vector<SourceFile> files {
        { "x/one.c", "void first(void)\n{\n    target(1);\n}\n" },
        { "y/two.cpp", "struct W {\n    void go() { target(2); }\n};\n" },
        { "z/def.c", "void target(int v)\n{\n    (void)v;\n}\n" },
        { "notes.txt", "target(3)\n" },
    };
    auto scan = find_call_sites(files, "target");
    REQUIRE(scan.sites.size() == 2);
    CHECK(scan.sites[0].file == "x/one.c");
    CHECK(scan.sites[0].caller->name == "first");
    CHECK(scan.sites[1].file == "y/two.cpp");
    CHECK(scan.sites[1].caller->name == "W::go");
    CHECK_FALSE(scan.sites[0].context_lines.empty());
}

TEST_CASE("call sites from a checked-out repository")
{
    cstest::Workspace ws;
    auto origin = ws.make_repo("o/calls");
    origin.commit({ { "lib.c", "int twice(int x)\n{\n    return 2 * x;\n}\n" },
                      { "main.c", "int twice(int);\nint main(void)\n{\n    return twice(4);\n}\n" } },
        "calls");
    RepoManager repos(ws.repo_config());
    auto handle = repos.ensure_clone("o/calls");
    repos.checkout(handle, "HEAD");
    auto scan = find_call_sites(handle, "twice");
    REQUIRE(scan.sites.size() == 1);
    CHECK(scan.sites[0].file == "main.c");
    CHECK(scan.sites[0].line == 4);
    auto again = find_call_sites(handle, "twice", 3);
    CHECK(again.sites.size() == 1);
}

TEST_CASE("degraded files fall back to a textual scan")
{
    std::vector<SourceFile> files { { "bad.c", "void f(void)\n{\n    g(1);\n    /* unterminated\n" } };
    auto scan = find_call_sites(files, "g");
    REQUIRE(scan.sites.size() == 1);
    CHECK(scan.sites[0].textual_fallback);
    CHECK(scan.degraded_files == std::vector<std::string> { "bad.c" });
}

TEST_CASE("key variables: member increments, locals and globals")
{
    auto member = extract_key_variables(deleted_line(11, "    AVI->video_pos++;"), kAvi, Language::c);
    REQUIRE(member.variables.size() == 1);
    CHECK(member.variables[0].identifier == "video_pos");
    CHECK(member.variables[0].kind == KeyVariableKind::assigned);
    CHECK(member.variables[0].source_line == 11);

    auto local = extract_key_variables(deleted_line(8, "    int tmp = n + 1;"), kAvi, Language::c);
    CHECK(local.variables.empty());

    auto global = extract_key_variables(deleted_line(4, "static int g_limit = 10;"), kAvi, Language::c);
    REQUIRE(global.variables.size() == 1);
    CHECK(global.variables[0].identifier == "g_limit");
    CHECK(global.variables[0].kind == KeyVariableKind::global);
    CHECK(global.variables[0].declaration_line == 4);
}

TEST_CASE("assignments to globals inside functions are classified as global")
{
    const char* src = "int counter;\nvoid bump(int by)\n{\n    int step = by;\n    counter += step;\n    by = 0;\n}\n";
    ChangeLines c;
    c.added.push_back({ 5, 4, "    counter += step * 2;" });
    c.added.push_back({ 6, 5, "    by = 1;" });
    auto r = extract_key_variables(c, src, Language::c);
    REQUIRE(r.variables.size() == 1);
    CHECK(r.variables[0].identifier == "counter");
    CHECK(r.variables[0].kind == KeyVariableKind::global);
    CHECK(r.variables[0].declaration_line == 1);
}

TEST_CASE("field declarations inside a class")
{
    const char* src = "struct Buf {\n    int len;\n    char *data;\n};\n";
    auto r = extract_key_variables(deleted_line(2, "    int len;"), src, Language::cpp);
    REQUIRE(r.variables.size() == 1);
    CHECK(r.variables[0].kind == KeyVariableKind::declared_field);
}

TEST_CASE("function span JSON round trip")
{
    FunctionSpan s { "f", 3, 9, "body\n", "a.c" };
    auto back = json(s).get<FunctionSpan>();
    CHECK(back.name == "f");
    CHECK(back.end_line == 9);
    CHECK(back.file == "a.c");
}

TEST_CASE("old-style definitions and function pointer returns")
{
    const char* kr = "int\nold(a, b)\n    int a;\n    char *b;\n{\n    return a;\n}\n";
    auto r = place_lines(kr, Language::c, { 3, 6 });
    REQUIRE(r.placements[1].function);
    CHECK(r.placements[1].function->name == "old");
    CHECK(r.placements[1].function->start_line == 1);
    CHECK(r.placements[0].function);

    const char* fp = "int (*pick(int k))(int)\n{\n    return 0;\n}\nint (*cb)(int);\n";
    auto p = place_lines(fp, Language::c, { 3, 5 });
    REQUIRE(p.placements[0].function);
    CHECK(p.placements[0].function->name == "pick");
    CHECK(p.placements[1].placement == Placement::file_scope);
}

TEST_CASE("a macro statement before a struct is not an old-style header")
{
    const char* src = "DECLARE(a, b);\nint a;\nstruct s {\n    int x;\n};\nvoid f(void)\n{\n}\n";
    auto r = place_lines(src, Language::c, { 4, 7 });
    CHECK(r.placements[0].placement == Placement::file_scope);
    REQUIRE(r.placements[1].function);
    CHECK(r.placements[1].function->name == "f");
}
