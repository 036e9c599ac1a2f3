#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctxverify/context.hpp"
#include "ctxverify/corpus.hpp"
#include "ctxverify/error.hpp"
#include "ctxverify/persistence.hpp"
#include "ctxverify/pipeline.hpp"
#include "ctxverify/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ctxverify;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

void fail_line(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

std::optional<std::string> context_flag(const std::string& value) {
    if (value == "none") return std::nullopt;
    return value;
}

std::string file_label(const std::string& value) {
    std::string out;
    for (unsigned char ch : value) out += (std::isalnum(ch) || ch == '-' || ch == '_') ? static_cast<char>(ch) : '_';
    return out;
}

std::map<std::string, std::vector<ClassId>> class_lists(const Corpus& corpus, const std::vector<std::string>& ids,
                                                        int min_area) {
    std::map<std::string, std::vector<ClassId>> out;
    for (const auto& id : ids) {
        auto& classes = out[id];
        for (const auto& obj : extract_objects(corpus.load_scene(id), min_area)) classes.push_back(obj.class_id);
    }
    return out;
}

json selection_json(const ContextSelectionReport& report) {
    json attrs = json::array();
    for (const auto& a : report.attributes) {
        attrs.push_back({{"attribute", a.attribute},
                         {"mutual_information", a.mutual_information},
                         {"coverage", a.coverage},
                         {"balance", a.balance},
                         {"observed_values", a.observed_values},
                         {"eligible", a.eligible}});
    }
    return {{"schema_version", kCorpusSchemaVersion},
            {"min_coverage", report.min_coverage},
            {"min_balance", report.min_balance},
            {"attributes", attrs},
            {"ranking", report.ranking}};
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        write_text_file(out_path, text);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic consistency verification for segmentation label maps"};
    app.require_subcommand(1);

    // synth
    std::string synth_config, synth_out;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    synth->add_option("--config", synth_config, "Generator config JSON (built-in world if omitted)");
    synth->add_option("-o,--out", synth_out, "Output corpus directory")->required();
    synth->add_option("--seed", synth_seed, "Random seed")->required();

    // build-stats
    std::string bs_corpus, bs_context = "none", bs_out;
    double bs_alpha = kDefaultAlpha;
    int bs_min_area = kDefaultMinArea, bs_bins = kDefaultDistanceBins;
    auto* build_stats = app.add_subcommand("build-stats", "Build co-occurrence statistics from the training split");
    build_stats->add_option("corpus", bs_corpus, "Corpus directory")->required();
    build_stats->add_option("--context", bs_context, "Context attribute, or none");
    build_stats->add_option("--alpha", bs_alpha, "Laplace smoothing constant")->check(CLI::PositiveNumber);
    build_stats->add_option("--min-area", bs_min_area, "Minimum object area in pixels")->check(CLI::NonNegativeNumber);
    build_stats->add_option("--distance-bins", bs_bins, "Number of distance bins")->check(CLI::PositiveNumber);
    build_stats->add_option("-o,--out", bs_out, "Output directory")->required();

    // select-contexts
    std::string sc_corpus, sc_out;
    SelectionThresholds sc_thresholds;
    int sc_min_area = kDefaultMinArea;
    auto* select = app.add_subcommand("select-contexts", "Rank attributes by mutual information with object classes");
    select->add_option("corpus", sc_corpus, "Corpus directory")->required();
    select->add_option("--min-coverage", sc_thresholds.min_coverage)->check(CLI::Range(0.0, 1.0));
    select->add_option("--min-balance", sc_thresholds.min_balance)->check(CLI::Range(0.0, 1.0));
    select->add_option("--min-area", sc_min_area)->check(CLI::NonNegativeNumber);
    select->add_option("-o,--out", sc_out, "Report path (standard output if omitted)");

    // gen-contradictions
    std::string gc_corpus, gc_out, gc_split = "val";
    std::uint64_t gc_seed = 0;
    int gc_min_area = kDefaultMinArea;
    auto* gen = app.add_subcommand("gen-contradictions", "Write removal contradictions for a split");
    gen->add_option("corpus", gc_corpus, "Corpus directory")->required();
    gen->add_option("--split", gc_split)->check(CLI::IsMember({"train", "val"}));
    gen->add_option("--min-area", gc_min_area)->check(CLI::NonNegativeNumber);
    gen->add_option("--seed", gc_seed, "Random seed")->required();
    gen->add_option("-o,--out", gc_out, "Output directory")->required();

    // train
    std::string tr_corpus, tr_context = "none", tr_out, tr_aggregation = "majority";
    std::uint64_t tr_seed = 0;
    TrainOptions tr_options;
    auto* train = app.add_subcommand("train", "Train global and per-context verifiers");
    train->add_option("corpus", tr_corpus, "Corpus directory")->required();
    train->add_option("--context", tr_context, "Context attribute, or none");
    train->add_option("--seed", tr_seed, "Random seed")->required();
    train->add_option("--lr", tr_options.hyperparams.learning_rate)->check(CLI::PositiveNumber);
    train->add_option("--epochs", tr_options.hyperparams.epochs)->check(CLI::PositiveNumber);
    train->add_option("--lambda", tr_options.hyperparams.l2_lambda)->check(CLI::NonNegativeNumber);
    train->add_option("--alpha", tr_options.alpha)->check(CLI::PositiveNumber);
    train->add_option("--min-area", tr_options.min_area)->check(CLI::NonNegativeNumber);
    train->add_option("--distance-bins", tr_options.distance_bins)->check(CLI::PositiveNumber);
    train->add_option("--min-context-images", tr_options.min_context_images)->check(CLI::PositiveNumber);
    train->add_option("--aggregation", tr_aggregation)->check(CLI::IsMember({"majority", "mean_threshold"}));
    train->add_option("-o,--out", tr_out, "Registry path")->required();

    // verify
    std::string vf_registry, vf_image, vf_attributes;
    auto* verify_cmd = app.add_subcommand("verify", "Verify one label map");
    verify_cmd->add_option("registry", vf_registry, "Registry path")->required();
    verify_cmd->add_option("image", vf_image, "Label grid (.lgrid)")->required();
    verify_cmd->add_option("--attributes", vf_attributes, "Attribute record JSON");

    // evaluate
    std::string ev_registry, ev_corpus, ev_out, ev_split = "val";
    std::uint64_t ev_seed = 0;
    unsigned ev_threads = 1;
    bool ev_wall_time = false;
    auto* eval = app.add_subcommand("evaluate", "Evaluate a registry on a corpus split");
    eval->add_option("registry", ev_registry, "Registry path")->required();
    eval->add_option("corpus", ev_corpus, "Corpus directory")->required();
    eval->add_option("--split", ev_split)->check(CLI::IsMember({"train", "val"}));
    eval->add_option("--seed", ev_seed, "Random seed for contradictions")->required();
    eval->add_option("--threads", ev_threads)->check(CLI::PositiveNumber);
    eval->add_flag("--wall-time", ev_wall_time, "Record wall time (makes reports non-reproducible)");
    eval->add_option("-o,--out", ev_out, "Report path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail_line("UsageError", e.what());
        return kExitUsage;
    }

    try {
        if (*synth) {
            const SyntheticConfig config = synth_config.empty() ? default_synthetic_config()
                                                                : parse_synthetic_config(read_text_file(synth_config));
            const Corpus corpus = synth_corpus(config, synth_out, synth_seed);
            std::printf("wrote %zu train and %zu val images to %s\n", corpus.train.size(), corpus.val.size(),
                        synth_out.c_str());
        } else if (*build_stats) {
            const Corpus corpus = load_corpus(bs_corpus);
            const auto context = context_flag(bs_context);
            if (context && !corpus.attributes.has_attribute(*context)) {
                throw SchemaError("context attribute '" + *context + "' not in schema");
            }
            std::vector<ClassId> universe;
            for (const auto& [id, _] : corpus.class_map) universe.push_back(id);
            StatsBuilder global(universe, bs_bins);
            std::map<std::string, StatsBuilder> per_context;
            for (const auto& id : corpus.train) {
                const SceneAnalysis scene = analyze_scene(corpus.load_scene(id), bs_min_area, bs_bins);
                global.accumulate(scene);
                if (!context) continue;
                const std::string& value = corpus.attributes.value(id, *context);
                if (value == kPlaceholder) continue;
                per_context.try_emplace(value, universe, bs_bins).first->second.accumulate(scene);
            }
            save_stats_model((fs::path(bs_out) / "global.json").string(), finalize(global, bs_alpha));
            for (const auto& [value, builder] : per_context) {
                save_stats_model((fs::path(bs_out) / ("context-" + file_label(value) + ".json")).string(),
                                 finalize(builder, bs_alpha));
            }
            std::printf("wrote %zu statistics models to %s\n", per_context.size() + 1, bs_out.c_str());
        } else if (*select) {
            const Corpus corpus = load_corpus(sc_corpus);
            const auto report =
                score_attributes(corpus.attributes, class_lists(corpus, corpus.all_ids(), sc_min_area), sc_thresholds);
            emit(sc_out, selection_json(report).dump(2) + "\n");
        } else if (*gen) {
            const Corpus corpus = load_corpus(gc_corpus);
            const auto& ids = gc_split == "train" ? corpus.train : corpus.val;
            json pairs = json::array();
            json skipped = json::array();
            for (const auto& id : ids) {
                const LabelGrid grid = corpus.load_scene(id);
                if (extract_objects(grid, gc_min_area).size() < 2) {
                    skipped.push_back(id);
                    continue;
                }
                const auto c = generate_contradiction(grid, derive_seed(gc_seed, hash_string(id)), gc_min_area);
                const std::string rel = "invalid/" + id + ".lgrid";
                save_label_grid((fs::path(gc_out) / rel).string(), c.grid);
                pairs.push_back({{"image_id", id},
                                 {"valid", fs::relative(corpus.image_path(id), gc_out).generic_string()},
                                 {"invalid", rel},
                                 {"removed_class", c.removed_class},
                                 {"removed_object", c.removed_object},
                                 {"removed_pixels", c.removed_pixels}});
            }
            const json manifest = {{"schema_version", kCorpusSchemaVersion},
                                   {"seed", gc_seed},
                                   {"split", gc_split},
                                   {"min_area", gc_min_area},
                                   {"pairs", pairs},
                                   {"skipped", skipped}};
            write_text_file((fs::path(gc_out) / "manifest.json").string(), manifest.dump(2) + "\n");
            std::printf("wrote %zu contradictions (%zu skipped) to %s\n", pairs.size(), skipped.size(),
                        gc_out.c_str());
        } else if (*train) {
            const Corpus corpus = load_corpus(tr_corpus);
            tr_options.aggregation = aggregation_from_string(tr_aggregation);
            const auto scenes = corpus.load_split(Split::Train);
            const auto registry =
                train_registry(scenes, corpus.attributes, context_flag(tr_context), tr_options, tr_seed);
            save_registry(tr_out, registry);
            std::printf("trained global model and %zu context models -> %s\n", registry.contexts.size(),
                        tr_out.c_str());
        } else if (*verify_cmd) {
            const VerifierRegistry registry = load_registry(vf_registry);
            const LabelGrid grid = load_label_grid(vf_image, registry.class_map);
            std::optional<AttributeRecord> record;
            if (!vf_attributes.empty()) {
                // Either a bare {name: value} record or one corpus entry {"image_id", "attributes"}.
                json doc = json::parse(read_text_file(vf_attributes));
                if (doc.is_object() && doc.contains("attributes")) doc = doc["attributes"];
                if (!doc.is_object()) throw FormatError("attribute record must be a JSON object");
                record.emplace();
                for (const auto& [k, v] : doc.items()) {
                    if (k == "schema_version") continue;
                    if (!v.is_string()) throw FormatError("attribute '" + k + "' must be a string");
                    (*record)[k] = v.get<std::string>();
                }
            }
            std::cout << verdict_to_json(verify(grid, registry, record ? &*record : nullptr));
        } else if (*eval) {
            const auto start = std::chrono::steady_clock::now();
            const VerifierRegistry registry = load_registry(ev_registry);
            const Corpus corpus = load_corpus(ev_corpus);
            const auto scenes = corpus.load_split(ev_split == "train" ? Split::Train : Split::Val);
            RunReport report = evaluate(registry, scenes, corpus.attributes, ev_seed, ev_threads);
            report.config["split"] = json(ev_split).dump();
            if (ev_wall_time) {
                report.wall_time_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
            write_text_file(ev_out, run_report_to_json(report));
            std::cout << run_report_table(report);
        }
    } catch (const Error& e) {
        fail_line(e.kind(), e.what());
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        fail_line("FormatError", e.what());
        return kExitValidation;
    } catch (const fs::filesystem_error& e) {
        fail_line("IOError", e.what());
        return kExitValidation;
    }
    return 0;
}
