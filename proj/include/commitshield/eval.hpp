// Labeled datasets, replayed or live pipeline runs, and precision/recall/F1.
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "commitshield/vfd.hpp"
#include "commitshield/vid.hpp"

namespace commitshield {

class MissingPrediction : public Error {
public:
    using Error::Error;
};

class MissingReport : public Error {
public:
    using Error::Error;
};

/// Exact non-negative fraction; den > 0.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    friend bool operator==(const Rational& a, const Rational& b)
    {
        return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
    }
};

/// a/b, or nothing when b is zero.
std::optional<Rational> ratio(std::int64_t a, std::int64_t b);
/// Harmonic mean 2PR/(P+R); nothing if either side is missing or both are zero.
std::optional<Rational> f1_of(const std::optional<Rational>& p, const std::optional<Rational>& r);
/// Two decimals, halves rounded up ("0.88").
std::string render_2dp(const Rational& value);
/// Parses a decimal like "0.81" exactly.
Rational rational_from_decimal(std::string_view text);

enum class VfdLabel { fix, non_fix };

std::string to_string(VfdLabel label);

struct VfdSample {
    CommitRef commit;
    VfdLabel label = VfdLabel::non_fix;
    std::optional<std::string> cve_id;
};

struct VidSample {
    CommitRef fix_commit;
    CommitRef labeled_introducer;
};

struct MetricsReport {
    std::string task; // "vfd" or "vid"
    int samples = 0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    // Null for introduction scoring, which has no negatives.
    std::optional<int> tn;
    std::optional<Rational> precision;
    std::optional<Rational> recall;
    std::optional<Rational> f1;
    // Samples whose pipeline run failed (scored as negative predictions).
    int errors = 0;
    // Set when a run was interrupted and only finished samples were scored.
    bool partial = false;
};

struct VfdPrediction {
    CommitRef commit;
    bool yes = false;
    bool error = false;
};

struct VidOutcome {
    CommitRef fix_commit;
    std::vector<CommitRef> predicted;
    bool error = false;
};

std::vector<VfdSample> parse_vfd_dataset(std::istream& in);
std::vector<VidSample> parse_vid_dataset(std::istream& in);
std::vector<VfdSample> load_vfd_dataset(const std::filesystem::path& path);
std::vector<VidSample> load_vid_dataset(const std::filesystem::path& path);

MetricsReport score_vfd(const std::vector<VfdPrediction>& predictions, const std::vector<VfdSample>& samples);
MetricsReport score_vid(const std::vector<VidOutcome>& outcomes, const std::vector<VidSample>& samples);
MetricsReport score_vid(const std::vector<VidReport>& reports, const std::vector<VidSample>& samples);

VfdPrediction prediction_of(const VfdReport& report);
VidOutcome outcome_of(const VidReport& report);

/// Every *.json file in `dir` holding a report of the given kind.
std::vector<VfdReport> load_vfd_reports(const std::filesystem::path& dir);
std::vector<VidReport> load_vid_reports(const std::filesystem::path& dir);

struct EvalRunOptions {
    int concurrency = 1;
    // Polled between samples; when set, unfinished samples are dropped.
    const std::atomic<bool>* stop = nullptr;
    // Called with a diagnostic for each failed sample.
    std::function<void(const std::string&)> on_error;
    // When set, each finished report is written here as <sha>.json.
    std::optional<std::filesystem::path> report_dir;
};

struct VfdRun {
    std::vector<VfdSample> finished;
    std::vector<VfdPrediction> predictions;
    bool interrupted = false;
};

struct VidRun {
    std::vector<VidSample> finished;
    std::vector<VidOutcome> outcomes;
    bool interrupted = false;
};

VfdRun run_vfd_eval(const std::vector<VfdSample>& samples, PipelineContext& ctx, const EvalRunOptions& options = {});
VidRun run_vid_eval(const std::vector<VidSample>& samples, PipelineContext& ctx, const VidOptions& vid,
    const EvalRunOptions& options = {});

json metrics_to_json(const MetricsReport& report);
std::string metrics_table(const MetricsReport& report);

void to_json(json& j, const VfdSample& v);
void from_json(const json& j, VfdSample& v);
void to_json(json& j, const VidSample& v);
void from_json(const json& j, VidSample& v);

} // namespace commitshield
