#include <doctest.h>

#include <algorithm>
#include <random>

#include "commitshield/diff.hpp"
#include "corpus.hpp"

using namespace commitshield;

namespace {

// Piecewise rule written out independently of the library.
int expected_extension(int x, int small = 10, int large = 30)
{
    if (x < small)
        return x;
    if (x <= large)
        return x / 2;
    return 0;
}

// A hunk at old line `start` with `before` and `after` context lines around
// `deleted` removals and `added` insertions.
Hunk make_hunk(int start, int before, int deleted, int added, int after)
{
    int old_len = before + deleted + after;
    int new_len = before + added + after;
    std::string text = "@@ -" + std::to_string(start) + "," + std::to_string(old_len) + " +" + std::to_string(start) + ","
        + std::to_string(new_len) + " @@\n";
    for (int i = 0; i < before; ++i)
        text += " ctx\n";
    for (int i = 0; i < deleted; ++i)
        text += "-old " + std::to_string(i) + "\n";
    for (int i = 0; i < added; ++i)
        text += "+new " + std::to_string(i) + "\n";
    for (int i = 0; i < after; ++i)
        text += " ctx\n";
    auto hunks = parse_hunks(text);
    REQUIRE(hunks.size() == 1);
    return hunks[0];
}

int count_lines_of(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_CASE("extension amount for every change size up to 50")
{
    ContextExtensionPolicy policy;
    for (int x = 1; x <= 50; ++x) {
        CAPTURE(x);
        int e = expected_extension(x);
        CHECK(policy.extension(x) == e);
        // Split the change between removals and additions in every way.
        for (int deleted = 0; deleted <= x; deleted += std::max(1, x / 4)) {
            Hunk h = make_hunk(500, 3, deleted, x - deleted, 3);
            REQUIRE(h.changed_line_count() == x);
            ExtendedHunk ext = extend_context(h, policy, std::nullopt, 5000, HunkSide::new_file);
            CHECK(ext.nominal_extension == e);
            LineSpan own = hunk_span(h, HunkSide::new_file);
            CHECK(ext.resolved_range == LineSpan { own.start - e, own.end + e });
            CHECK(ext.extend_before == e);
            CHECK(ext.extend_after == e);
            CHECK_FALSE(ext.clamped_to_function);
        }
    }
}

TEST_CASE("extension rule under other thresholds")
{
    std::mt19937 rng(11);
    for (int round = 0; round < 200; ++round) {
        ContextExtensionPolicy policy;
        policy.small_threshold = 1 + static_cast<int>(rng() % 40);
        policy.large_threshold = policy.small_threshold + static_cast<int>(rng() % 60);
        for (int x = 0; x <= 120; ++x)
            CHECK(policy.extension(x) == expected_extension(x, policy.small_threshold, policy.large_threshold));
    }
}

TEST_CASE("extended ranges stay inside the function cap and the file")
{
    std::mt19937 rng(29);
    auto roll = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1)); };
    ContextExtensionPolicy policy;
    for (int round = 0; round < 5000; ++round) {
        int deleted = roll(0, 25);
        int added = roll(deleted == 0 ? 1 : 0, 25);
        int before = roll(0, 3);
        int after = roll(0, 3);
        int old_len = before + deleted + after;
        int file_len = std::max(1, old_len + roll(0, 200));
        int start = roll(1, std::max(1, file_len - old_len + 1));
        if (old_len == 0)
            start = roll(0, file_len);
        Hunk h = make_hunk(start, before, deleted, added, after);
        std::optional<LineSpan> fn;
        if (roll(0, 2) != 0) {
            int a = roll(1, file_len);
            int b = roll(a, file_len);
            fn = LineSpan { a, b };
        }
        CAPTURE(round);
        ExtendedHunk ext = extend_context(h, policy, fn, file_len, HunkSide::old_file);
        const LineSpan own = ext.hunk_range;
        const LineSpan got = ext.resolved_range;
        const int e = expected_extension(deleted + added);

        // Oracle: the widened span, cut to the function hull and the file.
        int lo = own.start - e;
        int hi = own.end + e;
        bool capped = false;
        if (fn) {
            int cap_lo = std::min(fn->start, own.start);
            int cap_hi = std::max(fn->end, own.end);
            capped = lo < cap_lo || hi > cap_hi;
            lo = std::max(lo, cap_lo);
            hi = std::min(hi, cap_hi);
        }
        lo = std::max(lo, 1);
        hi = std::min(hi, file_len);
        CHECK(got == LineSpan { lo, hi });
        CHECK(ext.clamped_to_function == capped);

        CHECK(got.start >= 1);
        CHECK(got.end <= file_len);
        if (!own.empty())
            CHECK(got.contains(own));
        if (fn && !own.empty())
            CHECK((got.start >= std::min(fn->start, own.start) && got.end <= std::max(fn->end, own.end)));
        CHECK(ext.extend_before <= e);
        CHECK(ext.extend_after <= e);
    }
}

TEST_CASE("rendered extension shows the surrounding lines and the hunk")
{
    std::string file;
    for (int i = 1; i <= 60; ++i)
        file += "line " + std::to_string(i) + "\n";
    ContextExtensionPolicy policy;
    for (int deleted = 0; deleted <= 12; ++deleted) {
        Hunk h = make_hunk(20, 2, deleted, 1, 2);
        ExtendedHunk ext = extend_context(h, policy, LineSpan { 15, 50 }, 60, HunkSide::old_file);
        std::string text = render_extended(ext, file);
        int body = static_cast<int>(h.lines.size());
        CHECK(count_lines_of(text) == ext.extend_before + body + ext.extend_after);
        if (ext.extend_before > 0)
            CHECK(text.rfind(" line " + std::to_string(ext.resolved_range.start) + "\n", 0) == 0);
    }
}

TEST_CASE("fifty commits of git output round-trip through the parser")
{
    cstest::Workspace ws;
    auto repo = ws.make_repo("o/corpus");
    auto shas = cstest::build_diff_corpus(repo, 50);
    REQUIRE(shas.size() == 50);

    // The corpus exercises the awkward cases.
    std::string all;
    for (const auto& sha : shas)
        all += repo.git({ "show", "--format=", "--no-color", "-M", sha });
    CHECK(all.find("\\ No newline at end of file") != std::string::npos);
    CHECK(all.find("rename from") != std::string::npos);
    CHECK(all.find("new file mode") != std::string::npos);
    CHECK(all.find("deleted file mode") != std::string::npos);

    auto check = cstest::check_diff_round_trip(repo, "o/corpus", shas);
    CHECK(check.commits == 50);
    CHECK(check.hunks > 50);
    for (const auto& m : check.mismatches)
        FAIL_CHECK(m);
    CHECK(check.mismatches.empty());
}

TEST_CASE("serialized hunks parse back to the same hunks")
{
    cstest::Workspace ws;
    auto repo = ws.make_repo("o/corpus");
    auto shas = cstest::build_diff_corpus(repo, 20);
    for (const auto& sha : shas) {
        for (const auto& d : parse_unified_diff(repo.git({ "show", "--format=", "--no-color", "-M", sha }))) {
            std::string text = serialize_hunks(d.hunks);
            CHECK(parse_hunks(text) == d.hunks);
            for (const auto& h : d.hunks)
                CHECK(satisfies_invariants(h));
        }
    }
}
