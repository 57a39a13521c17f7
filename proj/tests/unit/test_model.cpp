#include <doctest.h>

#include "commitshield/model.hpp"

using namespace commitshield;

TEST_CASE("commit refs are validated and normalised")
{
    auto ref = validate_commit_ref("torvalds/linux", "ABCDEF1234");
    CHECK(ref.sha == "abcdef1234");
    CHECK(ref.display() == "torvalds/linux@abcdef1234");

    CHECK_THROWS_AS(validate_commit_ref("linux", "abcdef1"), MalformedSlug);
    CHECK_THROWS_AS(validate_commit_ref("a/b/c", "abcdef1"), MalformedSlug);
    CHECK_THROWS_AS(validate_commit_ref("a /b", "abcdef1"), MalformedSlug);
    CHECK_THROWS_AS(validate_commit_ref("a/b", "abc12"), MalformedSha);
    CHECK_THROWS_AS(validate_commit_ref("a/b", "xyz1234"), MalformedSha);
    CHECK_THROWS_AS(validate_commit_ref("a/b", std::string(41, 'a')), MalformedSha);
}

TEST_CASE("abbreviated shas name the same commit")
{
    auto full = validate_commit_ref("a/b", "0123456789abcdef0123456789abcdef01234567");
    auto abbrev = validate_commit_ref("a/b", "0123456");
    CHECK(same_commit(full, abbrev));
    CHECK(same_commit(abbrev, full));
    CHECK_FALSE(same_commit(abbrev, validate_commit_ref("a/c", "0123456")));
    CHECK_FALSE(same_commit(abbrev, validate_commit_ref("a/b", "0123457")));
}

TEST_CASE("language detection by extension")
{
    CHECK(detect_language("src/a.c") == Language::c);
    CHECK(detect_language("inc/a.h") == Language::c);
    CHECK(detect_language("a.cc") == Language::cpp);
    CHECK(detect_language("x/y.hpp") == Language::cpp);
    CHECK(detect_language("Legacy.C") == Language::cpp);
    CHECK(detect_language("README.md") == Language::other);
    CHECK(detect_language("dir.c/Makefile") == Language::other);
    CHECK(is_c_family(Language::cpp));
    CHECK_FALSE(is_c_family(Language::other));
}

TEST_CASE("extension policy thresholds")
{
    ContextExtensionPolicy p;
    CHECK(p.extension(0) == 0);
    CHECK(p.extension(9) == 9);
    CHECK(p.extension(10) == 5);
    CHECK(p.extension(11) == 5);
    CHECK(p.extension(30) == 15);
    CHECK(p.extension(31) == 0);
    CHECK_NOTHROW(p.validate());
    ContextExtensionPolicy bad { 30, 10 };
    CHECK_THROWS(bad.validate());
}

TEST_CASE("hunk invariants")
{
    Hunk h;
    h.old_start = 3;
    h.old_len = 2;
    h.new_start = 3;
    h.new_len = 2;
    h.lines = {
        { LineKind::context, "a", 3, 3 },
        { LineKind::deleted, "b", 4, std::nullopt },
        { LineKind::added, "c", std::nullopt, 4 },
    };
    CHECK(satisfies_invariants(h));
    CHECK(h.changed_line_count() == 2);
    h.lines[1].new_lineno = 4;
    CHECK_FALSE(satisfies_invariants(h));
}

TEST_CASE("file diff path and status agreement")
{
    FileDiff d;
    d.status = FileStatus::added;
    d.new_path = "x.c";
    CHECK(satisfies_invariants(d));
    d.old_path = "x.c";
    CHECK_FALSE(satisfies_invariants(d));
    FileDiff r;
    r.status = FileStatus::renamed;
    r.old_path = "a.c";
    r.new_path = "a.c";
    CHECK_FALSE(satisfies_invariants(r));
}

TEST_CASE("timestamps round trip")
{
    CHECK(parse_iso8601_utc("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601_utc("2023-11-14T22:13:20Z") == 1700000000);
    CHECK(parse_iso8601_utc("2023-11-15T00:13:20+02:00") == 1700000000);
    CHECK(format_iso8601_utc(1700000000) == "2023-11-14T22:13:20Z");
    CHECK_THROWS(parse_iso8601_utc("yesterday"));
}

TEST_CASE("commit record JSON round trip")
{
    CommitRecord rec;
    rec.ref = validate_commit_ref("o/r", "1234567890");
    rec.parents.push_back(validate_commit_ref("o/r", "abcdef0"));
    rec.message = "Fix overflow (#12)";
    rec.author_date = 1700000000;
    FileDiff d;
    d.old_path = d.new_path = std::string("a.c");
    d.language = Language::c;
    Hunk h;
    h.old_start = h.new_start = 1;
    h.old_len = 1;
    h.new_len = 1;
    h.lines = { { LineKind::deleted, "x", 1, std::nullopt }, { LineKind::added, "y", std::nullopt, 1 } };
    d.hunks.push_back(h);
    rec.diffs.push_back(d);
    rec.attachments.issues.push_back({ 12, "title", "body" });

    json j = versioned(json(rec));
    CHECK(j["schema_version"] == kSchemaVersion);
    CHECK_NOTHROW(check_schema_version(j));
    auto back = j.get<CommitRecord>();
    CHECK(back.ref == rec.ref);
    CHECK(back.message == rec.message);
    REQUIRE(back.diffs.size() == 1);
    CHECK(back.diffs[0].hunks[0] == h);
    CHECK(back.attachments.issues[0].number == 12);

    j["schema_version"] = kSchemaVersion + 1;
    CHECK_THROWS_AS(check_schema_version(j), SchemaError);
}
