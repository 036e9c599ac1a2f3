#include "ctxverify/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ctxverify/corpus.hpp"
#include "ctxverify/error.hpp"

namespace ctxverify {

ShapePrototypes build_prototypes(std::span<const SceneAnalysis> scenes) {
    std::map<ClassId, std::pair<std::vector<double>, int>> sums;
    for (const auto& scene : scenes) {
        for (std::size_t i = 0; i < scene.objects.size(); ++i) {
            auto& [sum, count] = sums[scene.objects[i].class_id];
            const auto& bins = scene.shapes[i].bins;
            if (sum.empty()) sum.assign(bins.size(), 0.0);
            for (std::size_t b = 0; b < bins.size(); ++b) sum[b] += bins[b];
            ++count;
        }
    }
    ShapePrototypes out;
    for (auto& [cls, entry] : sums) {
        auto& [sum, count] = entry;
        for (double& v : sum) v /= count;
        out.by_class[cls] = ShapeHistogram{std::move(sum)};
    }
    return out;
}

double missing_partner(const CooccurrenceModel& stats, ClassId cls, std::span<const ClassId> scene_classes) {
    double best = -1.0;
    for (ClassId c : stats.classes()) {
        if (std::find(scene_classes.begin(), scene_classes.end(), c) != scene_classes.end()) continue;
        best = std::max(best, stats.conditional_presence(cls, c));
    }
    if (best < 0.0) {
        const double base = static_cast<double>(stats.counts().class_images(cls));
        best = stats.alpha() / (base + 2.0 * stats.alpha());
    }
    return best;
}

FeatureVector featurize(const PairRelation& relation, const ShapeHistogram& shape_a, const CooccurrenceModel& stats,
                        const ShapePrototypes& prototypes, std::span<const ClassId> scene_classes) {
    const ClassId a = relation.a_class;
    const ClassId b = relation.b_class;
    FeatureVector fv(kFeatureCount, 0.0);
    fv[kPresence] = stats.presence_prob(a, b);
    fv[kPosition] = stats.position_prob(a, b, relation.rpos);
    fv[kProximity] = stats.proximity_prob(a, b, relation.rprox);
    fv[kDistance] = stats.distance_prob(a, b, relation.rdist_bin);
    fv[kSizeZ] = std::abs(stats.size_zscore(a, b, relation.rsize));
    fv[kRelDistance] = relation.rdist;
    auto proto = prototypes.by_class.find(a);
    fv[kShapeDeviation] = proto == prototypes.by_class.end() ? 0.0 : l1_distance(shape_a, proto->second);
    fv[kMissingPartnerA] = missing_partner(stats, a, scene_classes);
    fv[kMissingPartnerB] = missing_partner(stats, b, scene_classes);
    return fv;
}

std::vector<FeatureVector> featurize_scene(const SceneAnalysis& scene, const CooccurrenceModel& stats,
                                           const ShapePrototypes& prototypes) {
    std::vector<ClassId> present;
    for (const auto& obj : scene.objects) present.push_back(obj.class_id);
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());

    std::vector<FeatureVector> out;
    out.reserve(scene.relations.size());
    for (const auto& rel : scene.relations) {
        out.push_back(featurize(rel, scene.shapes[static_cast<std::size_t>(rel.a_object)], stats, prototypes, present));
    }
    return out;
}

LinearModel train_linear(std::span<const FeatureVector> features, std::span<const Label> labels,
                         const Hyperparams& hp) {
    if (features.size() != labels.size()) throw DimensionError("feature and label counts differ");
    if (features.empty()) throw DegenerateTrainingError("no training examples");
    const std::size_t dim = features.front().size();
    for (const auto& fv : features) {
        if (fv.size() != dim) throw DimensionError("inconsistent feature dimension");
    }

    LinearModel model;
    model.hyperparams = hp;
    for (Label l : labels) (l == Label::Contradiction ? model.n_pos : model.n_neg) += 1;
    if (model.n_pos == 0 || model.n_neg == 0) {
        throw DegenerateTrainingError("training data must contain both valid and contradictory examples");
    }

    const double n = static_cast<double>(features.size());
    model.feature_means.assign(dim, 0.0);
    model.feature_stds.assign(dim, 0.0);
    for (const auto& fv : features) {
        for (std::size_t d = 0; d < dim; ++d) model.feature_means[d] += fv[d];
    }
    for (double& m : model.feature_means) m /= n;
    for (const auto& fv : features) {
        for (std::size_t d = 0; d < dim; ++d) {
            const double dev = fv[d] - model.feature_means[d];
            model.feature_stds[d] += dev * dev;
        }
    }
    for (double& s : model.feature_stds) s = std::max(std::sqrt(s / n), kMinFeatureStd);

    std::vector<std::vector<double>> x(features.size(), std::vector<double>(dim));
    for (std::size_t i = 0; i < features.size(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            x[i][d] = (features[i][d] - model.feature_means[d]) / model.feature_stds[d];
        }
    }

    model.weights.assign(dim, 0.0);
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(hp.seed);
    const double shrink = 1.0 - hp.learning_rate * hp.l2_lambda;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            const double y = static_cast<double>(static_cast<int>(labels[i]));
            double margin = model.bias;
            for (std::size_t d = 0; d < dim; ++d) margin += model.weights[d] * x[i][d];
            for (double& w : model.weights) w *= shrink;
            if (y * margin < 1.0) {
                for (std::size_t d = 0; d < dim; ++d) model.weights[d] += hp.learning_rate * y * x[i][d];
                model.bias += hp.learning_rate * y;
            }
        }
    }
    return model;
}

double score(const LinearModel& model, const FeatureVector& fv) {
    if (fv.size() != model.weights.size() || model.feature_means.size() != model.weights.size() ||
        model.feature_stds.size() != model.weights.size()) {
        throw DimensionError("feature vector has " + std::to_string(fv.size()) + " entries, model expects " +
                             std::to_string(model.weights.size()));
    }
    double margin = model.bias;
    for (std::size_t d = 0; d < fv.size(); ++d) {
        margin += model.weights[d] * (fv[d] - model.feature_means[d]) / model.feature_stds[d];
    }
    return margin;
}

std::string_view to_string(Aggregation mode) {
    return mode == Aggregation::Majority ? "majority" : "mean_threshold";
}

Aggregation aggregation_from_string(std::string_view s) {
    if (s == "majority") return Aggregation::Majority;
    if (s == "mean_threshold") return Aggregation::MeanThreshold;
    throw FormatError("unknown aggregation mode '" + std::string(s) + "'");
}

AggregateResult aggregate(std::span<const double> margins, Aggregation mode) {
    if (margins.empty()) return {false, 0.5};
    const double n = static_cast<double>(margins.size());
    if (mode == Aggregation::Majority) {
        const auto positive = std::count_if(margins.begin(), margins.end(), [](double m) { return m > 0.0; });
        const bool contradiction = 2 * positive > static_cast<std::ptrdiff_t>(margins.size());
        const double agreeing = contradiction ? static_cast<double>(positive) : n - static_cast<double>(positive);
        return {contradiction, agreeing / n};
    }
    // Sorted summation keeps the mean independent of pair order.
    std::vector<double> sorted(margins.begin(), margins.end());
    std::sort(sorted.begin(), sorted.end());
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    return {mean > 0.0, 1.0 / (1.0 + std::exp(-mean))};
}

std::optional<std::string> VerifierRegistry::resolve_context(const AttributeRecord* attributes) const {
    if (!context_attribute || !attributes) return std::nullopt;
    auto it = attributes->find(*context_attribute);
    if (it == attributes->end() || it->second == kPlaceholder) return std::nullopt;
    if (!contexts.contains(it->second)) return std::nullopt;
    return it->second;
}

const ContextVerifier& VerifierRegistry::verifier_for(const std::optional<std::string>& context) const {
    if (!context) return global;
    auto it = contexts.find(*context);
    return it == contexts.end() ? global : it->second;
}

Verdict verify_with(const LabelGrid& grid, const ContextVerifier& verifier, const VerifierRegistry& registry,
                    const std::string& label) {
    const SceneAnalysis scene = analyze_scene(grid, registry.min_area, registry.distance_bins);
    const auto features = featurize_scene(scene, verifier.stats, verifier.prototypes);

    Verdict verdict;
    verdict.image_id = grid.image_id();
    verdict.model_used = label;
    std::vector<double> margins;
    margins.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& rel = scene.relations[i];
        const double m = score(verifier.model, features[i]);
        margins.push_back(m);
        verdict.pair_scores.push_back({rel.a_object, rel.b_object, rel.a_class, rel.b_class, m});
    }
    const auto result = aggregate(margins, registry.aggregation);
    verdict.contradiction = result.contradiction;
    verdict.confidence = result.confidence;
    return verdict;
}

Verdict verify(const LabelGrid& grid, const VerifierRegistry& registry, const AttributeRecord* attributes) {
    const auto context = registry.resolve_context(attributes);
    return verify_with(grid, registry.verifier_for(context), registry, context.value_or("global"));
}

namespace {

struct LabeledScenes {
    std::vector<SceneAnalysis> valid;
    std::vector<std::optional<SceneAnalysis>> contradictions;
};

LabeledScenes prepare_scenes(std::span<const LabelGrid* const> scenes, const TrainOptions& options,
                             std::uint64_t seed) {
    LabeledScenes out;
    for (const LabelGrid* grid : scenes) {
        out.valid.push_back(analyze_scene(*grid, options.min_area, options.distance_bins));
        if (out.valid.back().objects.size() < 2) {
            out.contradictions.emplace_back();
            continue;
        }
        const auto bad = generate_contradiction(*grid, derive_seed(seed, hash_string(grid->image_id())),
                                                options.min_area);
        out.contradictions.emplace_back(analyze_scene(bad.grid, options.min_area, options.distance_bins));
    }
    return out;
}

ContextVerifier train_context(std::span<const LabelGrid* const> scenes, const ClassMap& class_map,
                              const TrainOptions& options, std::uint64_t seed, const std::string& label) {
    if (scenes.empty()) throw EmptyCorpusError("no training scenes for context '" + label + "'");
    const LabeledScenes data = prepare_scenes(scenes, options, seed);

    std::vector<ClassId> universe;
    for (const auto& [id, _] : class_map) universe.push_back(id);
    StatsBuilder builder(universe, options.distance_bins);
    for (const auto& scene : data.valid) builder.accumulate(scene);
    CooccurrenceModel stats = finalize(builder, options.alpha);
    ShapePrototypes prototypes = build_prototypes(data.valid);

    std::vector<FeatureVector> features;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < data.valid.size(); ++i) {
        for (auto& fv : featurize_scene(data.valid[i], stats, prototypes)) {
            features.push_back(std::move(fv));
            labels.push_back(Label::Valid);
        }
        if (!data.contradictions[i]) continue;
        for (auto& fv : featurize_scene(*data.contradictions[i], stats, prototypes)) {
            features.push_back(std::move(fv));
            labels.push_back(Label::Contradiction);
        }
    }

    Hyperparams hp = options.hyperparams;
    hp.seed = derive_seed(seed, hash_string(label));
    LinearModel model = train_linear(features, labels, hp);
    model.context = label;
    return ContextVerifier{std::move(stats), std::move(prototypes), std::move(model)};
}

}  // namespace

VerifierRegistry train_registry(std::span<const LabelGrid> train_scenes, const AttributeTable& attributes,
                                const std::optional<std::string>& context_attribute, const TrainOptions& options,
                                std::uint64_t seed) {
    if (train_scenes.empty()) throw EmptyCorpusError("empty training split");
    if (context_attribute && !attributes.has_attribute(*context_attribute)) {
        throw SchemaError("context attribute '" + *context_attribute + "' not in schema");
    }
    const ClassMap& class_map = train_scenes.front().class_map();

    std::vector<const LabelGrid*> all;
    for (const auto& g : train_scenes) all.push_back(&g);

    VerifierRegistry registry{
        .context_attribute = context_attribute,
        .aggregation = options.aggregation,
        .min_area = options.min_area,
        .distance_bins = options.distance_bins,
        .alpha = options.alpha,
        .seed = seed,
        .class_map = class_map,
        .global = train_context(all, class_map, options, seed, "global"),
        .contexts = {},
    };
    if (!context_attribute) return registry;

    std::map<std::string, std::vector<const LabelGrid*>> groups;
    for (const auto* g : all) groups[attributes.value(g->image_id(), *context_attribute)].push_back(g);
    for (const auto& [value, members] : groups) {
        if (value == kPlaceholder || static_cast<int>(members.size()) < options.min_context_images) continue;
        registry.contexts.emplace(value, train_context(members, class_map, options, seed, value));
    }
    return registry;
}

}  // namespace ctxverify
