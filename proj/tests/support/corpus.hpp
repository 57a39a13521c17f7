// Labeled corpora shared by unit tests and the acceptance run.
#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "commitshield/analyzer.hpp"
#include "fixture.hpp"

namespace cstest {

struct PlacementCheck {
    int files = 0;
    int lines = 0;
    std::vector<std::string> mismatches;
};

/// Every line of every labeled file against place_lines.
PlacementCheck check_placement_corpus();

/// Brute-force "name(" scan with comments and strings blanked out. Matches
/// preceded by a type or declarator word are declarations, not calls, and
/// directives other than #define are ignored.
std::set<std::pair<std::string, int>> textual_call_oracle(const std::vector<commitshield::SourceFile>& files,
    const std::string& callee);

/// Files of the call-site fixture repository.
std::vector<commitshield::SourceFile> call_site_fixture();
/// Callees worth checking in that fixture.
std::vector<std::string> call_site_callees();

/// Builds a repository with many kinds of change; returns the commit shas.
std::vector<std::string> build_diff_corpus(GitRepo& repo, int commits);

struct RoundTripCheck {
    int commits = 0;
    int files = 0;
    int hunks = 0;
    std::vector<std::string> mismatches;
};

/// Parses each commit's patch as git prints it and as the forge payload
/// carries it, and compares the re-serialized hunk bodies with git's bytes.
RoundTripCheck check_diff_round_trip(const GitRepo& repo, const std::string& slug, const std::vector<std::string>& shas);

} // namespace cstest
