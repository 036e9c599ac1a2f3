#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxverify/corpus.hpp"
#include "ctxverify/verifier.hpp"

namespace ctxverify {

enum class ExampleKind { Valid, Invalid };
std::string_view to_string(ExampleKind kind);

// One evaluated example; the routed verdict and the global verdict side by side.
struct ExampleOutcome {
    std::string image_id;
    ExampleKind kind = ExampleKind::Valid;
    std::string model_used = "global";
    bool contradiction = false;
    double confidence = 0.5;
    bool global_contradiction = false;
    double global_confidence = 0.5;
    std::optional<ClassId> removed_class;

    bool expected() const { return kind == ExampleKind::Invalid; }
    bool correct() const { return contradiction == expected(); }
    bool global_correct() const { return global_contradiction == expected(); }
};

struct Metrics {
    std::string label;
    std::int64_t valid = 0;
    std::int64_t invalid = 0;
    std::int64_t total = 0;
    std::int64_t correct = 0;
    double accuracy = 0.0;
};

struct RunReport {
    std::string command = "evaluate";
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config;  // values are JSON texts
    std::vector<Metrics> per_context;           // one row per model used, sorted by label
    std::vector<Metrics> global_per_context;    // the global verifier on the same rows
    Metrics global;                             // the global verifier on every example
    double per_context_average_accuracy = 0.0;
    double global_average_accuracy = 0.0;
    // Unweighted row averages on both sides, in percentage points.
    double improvement_pp = 0.0;
    std::vector<ExampleOutcome> verdict_log;
    std::optional<double> wall_time_s;
};

// Counters recomputed from the log for the examples routed to `label`
// (every example when label is empty), scored by the routed or the global verdict.
Metrics recount(const std::vector<ExampleOutcome>& log, const std::string& label, bool use_global);

// Every validation scene is one valid example; scenes with two or more
// objects add one removal contradiction seeded per image id. Examples are
// evaluated on `threads` workers; the result does not depend on the count.
RunReport evaluate(const VerifierRegistry& registry, std::span<const LabelGrid> scenes,
                   const AttributeTable& attributes, std::uint64_t seed, unsigned threads = 1);

std::string run_report_to_json(const RunReport& report);
RunReport run_report_from_json(std::string_view json_text);
std::string run_report_table(const RunReport& report);

}  // namespace ctxverify
