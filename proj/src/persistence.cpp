#include "ctxverify/persistence.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "ctxverify/corpus.hpp"
#include "ctxverify/error.hpp"

namespace ctxverify {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr double kDerivedTolerance = 1e-12;

json parse_document(std::string_view text, const char* kind) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string(kind) + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("schema_version")) {
        throw FormatError(std::string(kind) + ": missing schema_version");
    }
    if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<long long>() != kModelSchemaVersion) {
        throw VersionError(std::string(kind) + ": unsupported schema_version " + doc["schema_version"].dump());
    }
    if (doc.value("kind", std::string()) != kind) throw FormatError(std::string("document is not a ") + kind);
    return doc;
}

// Runs `fn`, mapping JSON access errors to FormatError.
template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

// Nested [C][C][k] view of a flat table.
json nest(const auto& flat, std::size_t c, std::size_t k) {
    json outer = json::array();
    for (std::size_t a = 0; a < c; ++a) {
        json row = json::array();
        for (std::size_t b = 0; b < c; ++b) {
            const std::size_t base = (a * c + b) * k;
            if (k == 1) {
                row.push_back(flat[base]);
            } else {
                json cell = json::array();
                for (std::size_t i = 0; i < k; ++i) cell.push_back(flat[base + i]);
                row.push_back(cell);
            }
        }
        outer.push_back(row);
    }
    return outer;
}

template <typename T>
std::vector<T> flatten(const json& nested, std::size_t c, std::size_t k, const char* what) {
    std::vector<T> flat;
    flat.reserve(c * c * k);
    if (!nested.is_array() || nested.size() != c) throw FormatError(std::string(what) + ": wrong shape");
    for (const auto& row : nested) {
        if (!row.is_array() || row.size() != c) throw FormatError(std::string(what) + ": wrong shape");
        for (const auto& cell : row) {
            if (k == 1) {
                flat.push_back(cell.get<T>());
                continue;
            }
            if (!cell.is_array() || cell.size() != k) throw FormatError(std::string(what) + ": wrong shape");
            for (const auto& v : cell) flat.push_back(v.get<T>());
        }
    }
    return flat;
}

json stats_json(const CooccurrenceModel& model) {
    const RawCounts& raw = model.counts().raw();
    const std::size_t c = raw.classes.size();
    const auto k = static_cast<std::size_t>(raw.distance_bins);

    json doc;
    doc["schema_version"] = kModelSchemaVersion;
    doc["kind"] = "cooccurrence_model";
    doc["alpha"] = model.alpha();
    doc["distance_bins"] = raw.distance_bins;
    doc["size_fixed_point_bits"] = kSizeFixedBits;
    doc["classes"] = raw.classes;
    doc["images"] = raw.images;
    doc["class_images"] = raw.class_images;
    doc["presence_counts"] = nest(raw.presence, c, 1);
    doc["position_counts"] = nest(raw.position, c, kOctantCount);
    doc["proximity_counts"] = nest(raw.proximity, c, kProximityCount);
    doc["distance_counts"] = nest(raw.distance, c, k);
    std::vector<std::int64_t> moments;
    for (const auto& m : raw.size) {
        moments.push_back(m.n);
        moments.push_back(m.sum);
        moments.push_back(m.sum_sq);
    }
    doc["size_moments"] = nest(moments, c, 3);

    std::vector<double> presence, position, proximity, distance, mean, sd;
    for (ClassId a : raw.classes) {
        for (ClassId b : raw.classes) {
            presence.push_back(model.presence_prob(a, b));
            for (double v : model.position_dist(a, b)) position.push_back(v);
            for (double v : model.proximity_dist(a, b)) proximity.push_back(v);
            for (double v : model.distance_dist(a, b)) distance.push_back(v);
            mean.push_back(model.size_mean(a, b));
            sd.push_back(model.size_std(a, b));
        }
    }
    doc["presence_prob"] = nest(presence, c, 1);
    doc["position_dist"] = nest(position, c, kOctantCount);
    doc["proximity_dist"] = nest(proximity, c, kProximityCount);
    doc["distance_dist"] = nest(distance, c, k);
    doc["size_mean"] = nest(mean, c, 1);
    doc["size_std"] = nest(sd, c, 1);
    return doc;
}

void check_derived(const json& doc, const char* key, std::span<const double> expected, std::size_t c, std::size_t k) {
    if (!doc.contains(key)) return;
    const auto stored = flatten<double>(doc[key], c, k, key);
    for (std::size_t i = 0; i < stored.size(); ++i) {
        if (std::abs(stored[i] - expected[i]) > kDerivedTolerance) {
            throw FormatError(std::string("stored ") + key + " disagrees with its counts");
        }
    }
}

CooccurrenceModel stats_from(const json& doc) {
    return guarded("cooccurrence model", [&] {
        RawCounts raw;
        raw.classes = doc.at("classes").get<std::vector<ClassId>>();
        raw.distance_bins = doc.at("distance_bins").get<int>();
        if (doc.value("size_fixed_point_bits", kSizeFixedBits) != kSizeFixedBits) {
            throw FormatError("unsupported size fixed-point precision");
        }
        raw.images = doc.at("images").get<std::int64_t>();
        raw.class_images = doc.at("class_images").get<std::vector<std::int64_t>>();
        const std::size_t c = raw.classes.size();
        if (raw.distance_bins < 1) throw FormatError("distance_bins must be positive");
        const auto k = static_cast<std::size_t>(raw.distance_bins);
        raw.presence = flatten<std::int64_t>(doc.at("presence_counts"), c, 1, "presence_counts");
        raw.position = flatten<std::int64_t>(doc.at("position_counts"), c, kOctantCount, "position_counts");
        raw.proximity = flatten<std::int64_t>(doc.at("proximity_counts"), c, kProximityCount, "proximity_counts");
        raw.distance = flatten<std::int64_t>(doc.at("distance_counts"), c, k, "distance_counts");
        const auto moments = flatten<std::int64_t>(doc.at("size_moments"), c, 3, "size_moments");
        for (std::size_t i = 0; i < c * c; ++i) {
            raw.size.push_back({moments[3 * i], moments[3 * i + 1], moments[3 * i + 2]});
        }
        CooccurrenceModel model(StatsBuilder::from_raw(std::move(raw)), doc.at("alpha").get<double>());

        std::vector<double> presence, position, proximity, distance, mean, sd;
        for (ClassId a : model.classes()) {
            for (ClassId b : model.classes()) {
                presence.push_back(model.presence_prob(a, b));
                for (double v : model.position_dist(a, b)) position.push_back(v);
                for (double v : model.proximity_dist(a, b)) proximity.push_back(v);
                for (double v : model.distance_dist(a, b)) distance.push_back(v);
                mean.push_back(model.size_mean(a, b));
                sd.push_back(model.size_std(a, b));
            }
        }
        check_derived(doc, "presence_prob", presence, c, 1);
        check_derived(doc, "position_dist", position, c, kOctantCount);
        check_derived(doc, "proximity_dist", proximity, c, kProximityCount);
        check_derived(doc, "distance_dist", distance, c, k);
        check_derived(doc, "size_mean", mean, c, 1);
        check_derived(doc, "size_std", sd, c, 1);
        return model;
    });
}

json linear_json(const LinearModel& m) {
    json doc;
    doc["weights"] = m.weights;
    doc["bias"] = m.bias;
    doc["feature_means"] = m.feature_means;
    doc["feature_stds"] = m.feature_stds;
    doc["hyperparams"] = {{"learning_rate", m.hyperparams.learning_rate},
                          {"epochs", m.hyperparams.epochs},
                          {"l2_lambda", m.hyperparams.l2_lambda},
                          {"seed", m.hyperparams.seed}};
    doc["training_meta"] = {{"n_pos", m.n_pos}, {"n_neg", m.n_neg}, {"context", m.context}};
    return doc;
}

LinearModel linear_from(const json& doc) {
    return guarded("linear model", [&] {
        LinearModel m;
        m.weights = doc.at("weights").get<std::vector<double>>();
        m.bias = doc.at("bias").get<double>();
        m.feature_means = doc.at("feature_means").get<std::vector<double>>();
        m.feature_stds = doc.at("feature_stds").get<std::vector<double>>();
        const auto& hp = doc.at("hyperparams");
        m.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
        m.hyperparams.epochs = hp.at("epochs").get<int>();
        m.hyperparams.l2_lambda = hp.at("l2_lambda").get<double>();
        m.hyperparams.seed = hp.at("seed").get<std::uint64_t>();
        const auto& meta = doc.at("training_meta");
        m.n_pos = meta.at("n_pos").get<std::int64_t>();
        m.n_neg = meta.at("n_neg").get<std::int64_t>();
        m.context = meta.at("context").get<std::string>();
        if (m.feature_means.size() != m.weights.size() || m.feature_stds.size() != m.weights.size()) {
            throw DimensionError("linear model vectors differ in length");
        }
        for (double s : m.feature_stds) {
            if (!(s >= kMinFeatureStd)) throw FormatError("feature_stds must be >= 1e-6");
        }
        return m;
    });
}

json prototypes_json(const ShapePrototypes& p) {
    json doc = json::object();
    for (const auto& [cls, hist] : p.by_class) doc[std::to_string(cls)] = hist.bins;
    return doc;
}

ShapePrototypes prototypes_from(const json& doc) {
    return guarded("shape prototypes", [&] {
        ShapePrototypes p;
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            p.by_class[std::stoi(it.key())] = ShapeHistogram{it.value().get<std::vector<double>>()};
        }
        return p;
    });
}

std::string sanitize(const std::string& label) {
    std::string out;
    for (unsigned char ch : label) out += (std::isalnum(ch) || ch == '-' || ch == '_') ? static_cast<char>(ch) : '_';
    return out;
}

}  // namespace

std::string stats_model_to_json(const CooccurrenceModel& model) { return stats_json(model).dump(1) + "\n"; }

CooccurrenceModel stats_model_from_json(std::string_view json_text) {
    return stats_from(parse_document(json_text, "cooccurrence_model"));
}

std::string linear_model_to_json(const LinearModel& model) {
    json doc;
    doc["schema_version"] = kModelSchemaVersion;
    doc["kind"] = "linear_model";
    const json body = linear_json(model);
    for (auto& [k, v] : body.items()) doc[k] = v;
    return doc.dump(2) + "\n";
}

LinearModel linear_model_from_json(std::string_view json_text) {
    return linear_from(parse_document(json_text, "linear_model"));
}

void save_stats_model(const std::string& path, const CooccurrenceModel& model) {
    write_text_file(path, stats_model_to_json(model));
}

CooccurrenceModel load_stats_model(const std::string& path) { return stats_model_from_json(read_text_file(path)); }

void save_registry(const std::string& path, const VerifierRegistry& registry) {
    const fs::path p(path);
    const std::string stem = p.stem().string();
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");

    auto entry = [&](const ContextVerifier& v, const std::string& label) {
        const std::string stats_name = stem + ".stats." + sanitize(label) + ".json";
        save_stats_model((dir / stats_name).string(), v.stats);
        json e;
        e["stats"] = stats_name;
        e["prototypes"] = prototypes_json(v.prototypes);
        e["model"] = linear_json(v.model);
        return e;
    };

    json doc;
    doc["schema_version"] = kModelSchemaVersion;
    doc["kind"] = "verifier_registry";
    doc["context_attribute"] = registry.context_attribute ? json(*registry.context_attribute) : json(nullptr);
    doc["aggregation"] = std::string(to_string(registry.aggregation));
    doc["min_area"] = registry.min_area;
    doc["distance_bins"] = registry.distance_bins;
    doc["alpha"] = registry.alpha;
    doc["seed"] = registry.seed;
    json classes = json::object();
    for (const auto& [id, name] : registry.class_map) classes[std::to_string(id)] = name;
    doc["classes"] = classes;
    doc["global"] = entry(registry.global, "global");
    json contexts = json::object();
    for (const auto& [value, v] : registry.contexts) contexts[value] = entry(v, "ctx-" + value);
    doc["contexts"] = contexts;
    write_text_file(path, doc.dump(2) + "\n");
}

VerifierRegistry load_registry(const std::string& path) {
    const json doc = parse_document(read_text_file(path), "verifier_registry");
    const fs::path dir = fs::path(path).has_parent_path() ? fs::path(path).parent_path() : fs::path(".");

    auto entry = [&](const json& e) {
        const auto stats_name = guarded("registry", [&] { return e.at("stats").get<std::string>(); });
        return ContextVerifier{load_stats_model((dir / stats_name).string()), prototypes_from(e.at("prototypes")),
                               linear_from(e.at("model"))};
    };

    return guarded("registry", [&] {
        VerifierRegistry reg{
            .context_attribute = doc.at("context_attribute").is_null()
                                     ? std::nullopt
                                     : std::optional<std::string>(doc["context_attribute"].get<std::string>()),
            .aggregation = aggregation_from_string(doc.at("aggregation").get<std::string>()),
            .min_area = doc.at("min_area").get<int>(),
            .distance_bins = doc.at("distance_bins").get<int>(),
            .alpha = doc.at("alpha").get<double>(),
            .seed = doc.at("seed").get<std::uint64_t>(),
            .class_map = parse_class_map(doc.at("classes").dump()),
            .global = entry(doc.at("global")),
            .contexts = {},
        };
        for (auto it = doc.at("contexts").begin(); it != doc.at("contexts").end(); ++it) {
            reg.contexts.emplace(it.key(), entry(it.value()));
        }
        return reg;
    });
}

std::string verdict_to_json(const Verdict& verdict) {
    json doc;
    doc["image_id"] = verdict.image_id;
    doc["contradiction"] = verdict.contradiction;
    doc["confidence"] = verdict.confidence;
    doc["model_used"] = verdict.model_used;
    json pairs = json::array();
    for (const auto& p : verdict.pair_scores) {
        pairs.push_back({{"a_object", p.a_object},
                         {"b_object", p.b_object},
                         {"a_class", p.a_class},
                         {"b_class", p.b_class},
                         {"margin", p.margin}});
    }
    doc["pair_scores"] = pairs;
    return doc.dump(2) + "\n";
}

}  // namespace ctxverify
