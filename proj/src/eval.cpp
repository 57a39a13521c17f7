#include "commitshield/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json_util.hpp"

namespace commitshield {

namespace {

using i128 = __int128;

Rational reduce(i128 num, i128 den)
{
    if (den == 0)
        throw Error("zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 a = num < 0 ? -num : num, b = den;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        num /= a;
        den /= a;
    }
    return { static_cast<std::int64_t>(num), static_cast<std::int64_t>(den) };
}

template <typename Sample>
std::vector<Sample> parse_lines(std::istream& in, const CommitRef& (*key)(const Sample&))
{
    std::vector<Sample> out;
    std::vector<int> lines;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        Sample sample;
        try {
            sample = json::parse(line).get<Sample>();
        } catch (const SchemaError& e) {
            throw SchemaError(e.what(), lineno);
        } catch (const json::exception& e) {
            throw SchemaError(e.what(), lineno);
        } catch (const Error& e) {
            throw SchemaError(e.what(), lineno);
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (same_commit(key(out[i]), key(sample)))
                throw SchemaError("duplicate commit " + key(sample).display() + " (first seen on line "
                        + std::to_string(lines[i]) + ")",
                    lineno);
        }
        out.push_back(std::move(sample));
        lines.push_back(lineno);
    }
    return out;
}

const CommitRef& vfd_key(const VfdSample& s) { return s.commit; }
const CommitRef& vid_key(const VidSample& s) { return s.fix_commit; }

std::ifstream open_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open dataset " + path.string());
    return in;
}

void finish_rates(MetricsReport& m)
{
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = f1_of(m.precision, m.recall);
}

template <typename Report>
std::vector<Report> load_reports(const std::filesystem::path& dir, const std::string& kind)
{
    if (!std::filesystem::is_directory(dir))
        throw Error("replay directory " + dir.string() + " does not exist");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Report> out;
    for (const auto& file : files) {
        std::ifstream in(file);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw SchemaError(file.string() + ": " + e.what());
        }
        if (!doc.is_object() || doc.value("kind", "") != kind)
            continue;
        try {
            out.push_back(doc.get<Report>());
        } catch (const json::exception& e) {
            throw SchemaError(file.string() + ": " + e.what());
        } catch (const SchemaError& e) {
            throw SchemaError(file.string() + ": " + e.what());
        }
    }
    return out;
}

// Runs body(i) for every index with at most `concurrency` workers; stops
// handing out work once the stop flag is raised. Returns which indices ran.
std::vector<bool> fan_out(std::size_t count, const EvalRunOptions& options, const std::function<void(std::size_t)>& body)
{
    std::vector<bool> done(count, false);
    std::atomic<std::size_t> next { 0 };
    std::mutex mutex;
    auto worker = [&] {
        for (;;) {
            if (options.stop && options.stop->load())
                return;
            std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            body(i);
            std::lock_guard guard(mutex);
            done[i] = true;
        }
    };
    std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.concurrency, 1)), 1,
        std::max<std::size_t>(count, 1));
    if (threads == 1) {
        worker();
        return done;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    return done;
}

void write_report(const EvalRunOptions& options, const std::string& sha, const json& doc)
{
    if (!options.report_dir)
        return;
    std::filesystem::create_directories(*options.report_dir);
    std::ofstream out(*options.report_dir / (sha + ".json"));
    out << doc.dump(2) << '\n';
}

} // namespace

std::optional<Rational> ratio(std::int64_t a, std::int64_t b)
{
    if (b == 0)
        return std::nullopt;
    return reduce(a, b);
}

std::optional<Rational> f1_of(const std::optional<Rational>& p, const std::optional<Rational>& r)
{
    if (!p || !r)
        return std::nullopt;
    i128 num = 2 * static_cast<i128>(p->num) * r->num;
    i128 den = static_cast<i128>(p->num) * r->den + static_cast<i128>(r->num) * p->den;
    if (den == 0)
        return std::nullopt;
    return reduce(num, den);
}

std::string render_2dp(const Rational& value)
{
    if (value.den <= 0 || value.num < 0)
        throw Error("render_2dp expects a non-negative fraction");
    i128 scaled = (static_cast<i128>(value.num) * 200 + value.den) / (static_cast<i128>(value.den) * 2);
    auto whole = static_cast<long long>(scaled / 100);
    auto cents = static_cast<int>(scaled % 100);
    std::ostringstream out;
    out << whole << '.' << std::setw(2) << std::setfill('0') << cents;
    return out.str();
}

Rational rational_from_decimal(std::string_view text)
{
    i128 num = 0, den = 1;
    bool dot = false, digits = false;
    for (char c : text) {
        if (c == '.' && !dot) {
            dot = true;
            continue;
        }
        if (c < '0' || c > '9' || den > 1'000'000'000'000LL)
            throw Error("not a decimal: " + std::string(text));
        num = num * 10 + (c - '0');
        digits = true;
        if (dot)
            den *= 10;
    }
    if (!digits)
        throw Error("not a decimal: " + std::string(text));
    return reduce(num, den);
}

std::string to_string(VfdLabel label) { return label == VfdLabel::fix ? "fix" : "non_fix"; }

std::vector<VfdSample> parse_vfd_dataset(std::istream& in) { return parse_lines<VfdSample>(in, vfd_key); }
std::vector<VidSample> parse_vid_dataset(std::istream& in) { return parse_lines<VidSample>(in, vid_key); }

std::vector<VfdSample> load_vfd_dataset(const std::filesystem::path& path)
{
    auto in = open_dataset(path);
    return parse_vfd_dataset(in);
}

std::vector<VidSample> load_vid_dataset(const std::filesystem::path& path)
{
    auto in = open_dataset(path);
    return parse_vid_dataset(in);
}

MetricsReport score_vfd(const std::vector<VfdPrediction>& predictions, const std::vector<VfdSample>& samples)
{
    MetricsReport m;
    m.task = "vfd";
    m.samples = static_cast<int>(samples.size());
    m.tn = 0;
    for (const auto& sample : samples) {
        auto it = std::find_if(predictions.begin(), predictions.end(),
            [&](const VfdPrediction& p) { return same_commit(p.commit, sample.commit); });
        if (it == predictions.end())
            throw MissingPrediction("no prediction for " + sample.commit.display());
        bool yes = it->yes && !it->error;
        if (it->error)
            ++m.errors;
        bool fix = sample.label == VfdLabel::fix;
        if (yes && fix)
            ++m.tp;
        else if (yes)
            ++m.fp;
        else if (fix)
            ++m.fn;
        else
            ++*m.tn;
    }
    finish_rates(m);
    return m;
}

MetricsReport score_vid(const std::vector<VidOutcome>& outcomes, const std::vector<VidSample>& samples)
{
    MetricsReport m;
    m.task = "vid";
    m.samples = static_cast<int>(samples.size());
    for (const auto& sample : samples) {
        auto it = std::find_if(outcomes.begin(), outcomes.end(),
            [&](const VidOutcome& o) { return same_commit(o.fix_commit, sample.fix_commit); });
        if (it == outcomes.end())
            throw MissingReport("no report for " + sample.fix_commit.display());
        if (it->error) {
            ++m.errors;
            ++m.fn;
            continue;
        }
        bool hit = false;
        for (const auto& p : it->predicted) {
            if (same_commit(p, sample.labeled_introducer))
                hit = true;
            else
                ++m.fp;
        }
        if (hit)
            ++m.tp;
        else
            ++m.fn;
    }
    finish_rates(m);
    return m;
}

MetricsReport score_vid(const std::vector<VidReport>& reports, const std::vector<VidSample>& samples)
{
    std::vector<VidOutcome> outcomes;
    for (const auto& r : reports)
        outcomes.push_back(outcome_of(r));
    return score_vid(outcomes, samples);
}

VfdPrediction prediction_of(const VfdReport& report) { return { report.commit, report.verdict.yes(), false }; }

VidOutcome outcome_of(const VidReport& report) { return { report.fix_commit, report.predicted(), false }; }

std::vector<VfdReport> load_vfd_reports(const std::filesystem::path& dir)
{
    return load_reports<VfdReport>(dir, "vfd_report");
}

std::vector<VidReport> load_vid_reports(const std::filesystem::path& dir)
{
    return load_reports<VidReport>(dir, "vid_report");
}

VfdRun run_vfd_eval(const std::vector<VfdSample>& samples, PipelineContext& ctx, const EvalRunOptions& options)
{
    std::vector<VfdPrediction> slots(samples.size());
    auto done = fan_out(samples.size(), options, [&](std::size_t i) {
        try {
            VfdReport report = detect_fix(samples[i].commit, ctx);
            write_report(options, report.commit.sha, report);
            slots[i] = prediction_of(report);
        } catch (const std::exception& e) {
            if (options.on_error)
                options.on_error(samples[i].commit.display() + ": " + e.what());
            slots[i] = { samples[i].commit, false, true };
        }
    });
    VfdRun run;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!done[i]) {
            run.interrupted = true;
            continue;
        }
        run.finished.push_back(samples[i]);
        run.predictions.push_back(slots[i]);
    }
    return run;
}

VidRun run_vid_eval(const std::vector<VidSample>& samples, PipelineContext& ctx, const VidOptions& vid,
    const EvalRunOptions& options)
{
    std::vector<VidOutcome> slots(samples.size());
    auto done = fan_out(samples.size(), options, [&](std::size_t i) {
        try {
            VidReport report = detect_introduction(samples[i].fix_commit, ctx, vid);
            write_report(options, report.fix_commit.sha, report);
            slots[i] = outcome_of(report);
        } catch (const std::exception& e) {
            if (options.on_error)
                options.on_error(samples[i].fix_commit.display() + ": " + e.what());
            slots[i] = { samples[i].fix_commit, {}, true };
        }
    });
    VidRun run;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!done[i]) {
            run.interrupted = true;
            continue;
        }
        run.finished.push_back(samples[i]);
        run.outcomes.push_back(slots[i]);
    }
    return run;
}

json metrics_to_json(const MetricsReport& m)
{
    auto rate = [](const std::optional<Rational>& r) -> json {
        if (!r)
            return nullptr;
        return json::parse(render_2dp(*r));
    };
    return json {
        { "kind", "metrics_report" },
        { "task", m.task },
        { "samples", m.samples },
        { "tp", m.tp },
        { "fp", m.fp },
        { "fn", m.fn },
        { "tn", m.tn ? json(*m.tn) : json(nullptr) },
        { "precision", rate(m.precision) },
        { "recall", rate(m.recall) },
        { "f1", rate(m.f1) },
        { "errors", m.errors },
        { "partial", m.partial },
    };
}

std::string metrics_table(const MetricsReport& m)
{
    auto rate = [](const std::optional<Rational>& r) { return r ? render_2dp(*r) : std::string("null"); };
    std::vector<std::pair<std::string, std::string>> rows {
        { "task", m.task },
        { "samples", std::to_string(m.samples) },
        { "tp", std::to_string(m.tp) },
        { "fp", std::to_string(m.fp) },
        { "fn", std::to_string(m.fn) },
        { "tn", m.tn ? std::to_string(*m.tn) : "null" },
        { "precision", rate(m.precision) },
        { "recall", rate(m.recall) },
        { "f1", rate(m.f1) },
        { "errors", std::to_string(m.errors) },
    };
    if (m.partial)
        rows.emplace_back("partial", "true");
    std::ostringstream out;
    for (const auto& [k, v] : rows)
        out << std::left << std::setw(10) << k << ' ' << std::right << std::setw(8) << v << '\n';
    return out.str();
}

void to_json(json& j, const VfdSample& v)
{
    j = json { { "commit", v.commit }, { "label", to_string(v.label) } };
    if (v.cve_id)
        j["cve_id"] = *v.cve_id;
}

void from_json(const json& j, VfdSample& v)
{
    if (!j.is_object())
        throw SchemaError("sample must be an object");
    v.commit = detail::required<CommitRef>(j, "commit");
    auto label = detail::required<std::string>(j, "label");
    if (label == "fix")
        v.label = VfdLabel::fix;
    else if (label == "non_fix")
        v.label = VfdLabel::non_fix;
    else
        throw SchemaError("unknown label \"" + label + "\"");
    v.cve_id = detail::optional_from_json<std::string>(j, "cve_id");
}

void to_json(json& j, const VidSample& v)
{
    j = json { { "fix_commit", v.fix_commit }, { "labeled_introducer", v.labeled_introducer } };
}

void from_json(const json& j, VidSample& v)
{
    if (!j.is_object())
        throw SchemaError("sample must be an object");
    v.fix_commit = detail::required<CommitRef>(j, "fix_commit");
    v.labeled_introducer = detail::required<CommitRef>(j, "labeled_introducer");
}

} // namespace commitshield
