// Vulnerability-introduction detection: trace a fix back to the commit that
// brought the flaw in.
#pragma once

#include <string>
#include <vector>

#include "commitshield/vfd.hpp"

namespace commitshield {

struct VidOptions {
    // Further commits judged after the first positive verdict.
    int window = 10;
    int max_commits = 500;
    bool follow_renames = false;
    // Candidate patches above this size are skipped.
    std::size_t max_patch_bytes = 2 * 1024 * 1024;

    void validate() const;
};

enum class CandidateSource { file_history, variable_history, fallback };
enum class StopReason { positive_window_exhausted, history_exhausted, cap_reached };

std::string to_string(CandidateSource source);
std::string to_string(StopReason reason);

struct VidCandidate {
    CommitRef commit;
    Verdict verdict;
    CandidateSource source = CandidateSource::file_history;
    std::string extended_patch_hash;
};

struct VidReport {
    CommitRef fix_commit;
    std::string description;
    std::vector<std::string> relevant_patches;
    std::vector<KeyVariable> key_variables;
    // Positive verdicts in judging order, then the fallback if there is one.
    std::vector<VidCandidate> candidates;
    // Every judged commit in judging order.
    std::vector<VidCandidate> judged;
    int examined_count = 0;
    StopReason stop_reason = StopReason::history_exhausted;
    std::vector<Limitation> limitations;
    std::vector<PromptLogEntry> prompt_log;
    std::vector<TraceEvent> trace;

    /// Candidates reported as introducers (positives plus fallback).
    std::vector<CommitRef> predicted() const;
};

VidReport detect_introduction(const CommitRef& fix, PipelineContext& ctx, const VidOptions& options = {});

void to_json(json& j, const VidCandidate& v);
void from_json(const json& j, VidCandidate& v);
void to_json(json& j, const VidReport& v);
void from_json(const json& j, VidReport& v);

} // namespace commitshield
