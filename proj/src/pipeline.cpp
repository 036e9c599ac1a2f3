#include "ctxverify/pipeline.hpp"

#include <cstdio>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "ctxverify/error.hpp"

namespace ctxverify {

namespace {

using json = nlohmann::ordered_json;

struct SceneOutcomes {
    ExampleOutcome valid;
    std::optional<ExampleOutcome> invalid;
};

ExampleOutcome run_example(const LabelGrid& grid, ExampleKind kind, const VerifierRegistry& registry,
                           const AttributeRecord* record) {
    const Verdict routed = verify(grid, registry, record);
    const Verdict global = verify_with(grid, registry.global, registry, "global");
    ExampleOutcome out;
    out.image_id = grid.image_id();
    out.kind = kind;
    out.model_used = routed.model_used;
    out.contradiction = routed.contradiction;
    out.confidence = routed.confidence;
    out.global_contradiction = global.contradiction;
    out.global_confidence = global.confidence;
    return out;
}

SceneOutcomes run_scene(const LabelGrid& grid, const VerifierRegistry& registry, const AttributeTable& attributes,
                        std::uint64_t seed) {
    const AttributeRecord* record = attributes.record(grid.image_id());
    SceneOutcomes out{run_example(grid, ExampleKind::Valid, registry, record), std::nullopt};
    if (extract_objects(grid, registry.min_area).size() < 2) return out;
    const auto bad = generate_contradiction(grid, derive_seed(seed, hash_string(grid.image_id())), registry.min_area);
    out.invalid = run_example(bad.grid, ExampleKind::Invalid, registry, record);
    out.invalid->removed_class = bad.removed_class;
    return out;
}

json metrics_json(const Metrics& m) {
    return {{"label", m.label}, {"valid", m.valid},     {"invalid", m.invalid},
            {"total", m.total}, {"correct", m.correct}, {"accuracy", m.accuracy}};
}

Metrics metrics_from(const json& j) {
    return Metrics{j.at("label").get<std::string>(), j.at("valid").get<std::int64_t>(),
                   j.at("invalid").get<std::int64_t>(), j.at("total").get<std::int64_t>(),
                   j.at("correct").get<std::int64_t>(), j.at("accuracy").get<double>()};
}

}  // namespace

std::string_view to_string(ExampleKind kind) { return kind == ExampleKind::Valid ? "valid" : "invalid"; }

Metrics recount(const std::vector<ExampleOutcome>& log, const std::string& label, bool use_global) {
    Metrics m;
    m.label = label.empty() ? "all" : label;
    for (const auto& e : log) {
        if (!label.empty() && e.model_used != label) continue;
        (e.kind == ExampleKind::Valid ? m.valid : m.invalid) += 1;
        m.correct += use_global ? e.global_correct() : e.correct();
    }
    m.total = m.valid + m.invalid;
    m.accuracy = m.total == 0 ? 0.0 : static_cast<double>(m.correct) / static_cast<double>(m.total);
    return m;
}

RunReport evaluate(const VerifierRegistry& registry, std::span<const LabelGrid> scenes,
                   const AttributeTable& attributes, std::uint64_t seed, unsigned threads) {
    if (scenes.empty()) throw EmptyCorpusError("no validation scenes to evaluate");
    std::vector<SceneOutcomes> results(scenes.size());
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(scenes.size())));
    if (threads == 1) {
        for (std::size_t i = 0; i < scenes.size(); ++i) results[i] = run_scene(scenes[i], registry, attributes, seed);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < scenes.size(); i += threads) {
                        results[i] = run_scene(scenes[i], registry, attributes, seed);
                    }
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    RunReport report;
    report.seed = seed;
    for (auto& r : results) {
        report.verdict_log.push_back(std::move(r.valid));
        if (r.invalid) report.verdict_log.push_back(std::move(*r.invalid));
    }

    std::set<std::string> labels;
    for (const auto& e : report.verdict_log) labels.insert(e.model_used);
    double sum = 0.0;
    double global_sum = 0.0;
    for (const auto& label : labels) {
        report.per_context.push_back(recount(report.verdict_log, label, false));
        report.global_per_context.push_back(recount(report.verdict_log, label, true));
        sum += report.per_context.back().accuracy;
        global_sum += report.global_per_context.back().accuracy;
    }
    report.global = recount(report.verdict_log, "", true);
    const auto rows = static_cast<double>(labels.size());
    report.per_context_average_accuracy = sum / rows;
    report.global_average_accuracy = global_sum / rows;
    report.improvement_pp = (report.per_context_average_accuracy - report.global_average_accuracy) * 100.0;

    report.config["context_attribute"] =
        registry.context_attribute ? json(*registry.context_attribute).dump() : std::string("null");
    report.config["aggregation"] = json(std::string(to_string(registry.aggregation))).dump();
    report.config["alpha"] = json(registry.alpha).dump();
    report.config["min_area"] = json(registry.min_area).dump();
    report.config["distance_bins"] = json(registry.distance_bins).dump();
    report.config["train_seed"] = json(registry.seed).dump();
    report.config["context_models"] = json(static_cast<std::int64_t>(registry.contexts.size())).dump();
    report.config["val_images"] = json(static_cast<std::int64_t>(scenes.size())).dump();
    return report;
}

std::string run_report_to_json(const RunReport& report) {
    json doc;
    doc["schema_version"] = kCorpusSchemaVersion;
    doc["command"] = report.command;
    doc["seed"] = report.seed;
    json config = json::object();
    for (const auto& [k, v] : report.config) config[k] = json::parse(v);
    doc["config"] = config;
    if (report.wall_time_s) doc["wall_time_s"] = *report.wall_time_s;
    json rows = json::array();
    for (const auto& m : report.per_context) rows.push_back(metrics_json(m));
    doc["per_context"] = rows;
    json global_rows = json::array();
    for (const auto& m : report.global_per_context) global_rows.push_back(metrics_json(m));
    doc["global_per_context"] = global_rows;
    doc["global"] = metrics_json(report.global);
    doc["per_context_average_accuracy"] = report.per_context_average_accuracy;
    doc["global_average_accuracy"] = report.global_average_accuracy;
    doc["improvement_pp"] = report.improvement_pp;
    json log = json::array();
    for (const auto& e : report.verdict_log) {
        json j = {{"image_id", e.image_id},
                  {"example", std::string(to_string(e.kind))},
                  {"model_used", e.model_used},
                  {"contradiction", e.contradiction},
                  {"confidence", e.confidence},
                  {"global_contradiction", e.global_contradiction},
                  {"global_confidence", e.global_confidence}};
        j["removed_class"] = e.removed_class ? json(*e.removed_class) : json(nullptr);
        log.push_back(j);
    }
    doc["verdict_log"] = log;
    return doc.dump(2) + "\n";
}

RunReport run_report_from_json(std::string_view json_text) {
    try {
        const json doc = json::parse(json_text);
        if (doc.at("schema_version") != kCorpusSchemaVersion) throw VersionError("unsupported report schema_version");
        RunReport r;
        r.command = doc.at("command").get<std::string>();
        r.seed = doc.at("seed").get<std::uint64_t>();
        for (const auto& [k, v] : doc.at("config").items()) r.config[k] = v.dump();
        if (doc.contains("wall_time_s")) r.wall_time_s = doc["wall_time_s"].get<double>();
        for (const auto& m : doc.at("per_context")) r.per_context.push_back(metrics_from(m));
        for (const auto& m : doc.at("global_per_context")) r.global_per_context.push_back(metrics_from(m));
        r.global = metrics_from(doc.at("global"));
        r.per_context_average_accuracy = doc.at("per_context_average_accuracy").get<double>();
        r.global_average_accuracy = doc.at("global_average_accuracy").get<double>();
        r.improvement_pp = doc.at("improvement_pp").get<double>();
        for (const auto& j : doc.at("verdict_log")) {
            ExampleOutcome e;
            e.image_id = j.at("image_id").get<std::string>();
            e.kind = j.at("example").get<std::string>() == "valid" ? ExampleKind::Valid : ExampleKind::Invalid;
            e.model_used = j.at("model_used").get<std::string>();
            e.contradiction = j.at("contradiction").get<bool>();
            e.confidence = j.at("confidence").get<double>();
            e.global_contradiction = j.at("global_contradiction").get<bool>();
            e.global_confidence = j.at("global_confidence").get<double>();
            if (!j.at("removed_class").is_null()) e.removed_class = j["removed_class"].get<ClassId>();
            r.verdict_log.push_back(std::move(e));
        }
        return r;
    } catch (const json::exception& e) {
        throw FormatError(std::string("run report: ") + e.what());
    }
}

std::string run_report_table(const RunReport& report) {
    std::string out;
    char line[200];
    std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %10s %10s\n", "context", "valid", "invalid", "total", "routed",
                  "global");
    out += line;
    for (std::size_t i = 0; i < report.per_context.size(); ++i) {
        const Metrics& m = report.per_context[i];
        std::snprintf(line, sizeof line, "%-16s %8lld %8lld %8lld %9.2f%% %9.2f%%\n", m.label.c_str(),
                      static_cast<long long>(m.valid), static_cast<long long>(m.invalid),
                      static_cast<long long>(m.total), m.accuracy * 100.0, report.global_per_context[i].accuracy * 100.0);
        out += line;
    }
    std::snprintf(line, sizeof line, "%-16s %26s %9.2f%% %9.2f%%\n", "average", "",
                  report.per_context_average_accuracy * 100.0, report.global_average_accuracy * 100.0);
    out += line;
    std::snprintf(line, sizeof line, "%-16s %8lld %8lld %8lld %10s %9.2f%%\n", "all examples",
                  static_cast<long long>(report.global.valid), static_cast<long long>(report.global.invalid),
                  static_cast<long long>(report.global.total), "", report.global.accuracy * 100.0);
    out += line;
    std::snprintf(line, sizeof line, "improvement %+.2f pp\n", report.improvement_pp);
    out += line;
    return out;
}

}  // namespace ctxverify
