#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxverify/context.hpp"
#include "ctxverify/relations.hpp"
#include "ctxverify/stats.hpp"

namespace ctxverify {

// Per-pair feature layout.
enum FeatureIndex : int {
    kPresence = 0,       // P(a, b both present)
    kPosition,           // P(observed octant | a, b)
    kProximity,          // P(observed proximity label | a, b)
    kDistance,           // P(observed distance bin | a, b)
    kSizeZ,              // |z-score of the size log-ratio|
    kRelDistance,        // rdist
    kShapeDeviation,     // L1(shape(A), prototype(class A))
    kMissingPartnerA,    // max over absent classes c of P(c | a)
    kMissingPartnerB,    // same for b
    kFeatureCount
};

using FeatureVector = std::vector<double>;

// Mean shape histogram per class.
struct ShapePrototypes {
    std::map<ClassId, ShapeHistogram> by_class;
    friend bool operator==(const ShapePrototypes&, const ShapePrototypes&) = default;
};

ShapePrototypes build_prototypes(std::span<const SceneAnalysis> scenes);

// Strongest expectation of a class that is not in the scene; the smoothed
// prior of a never-seen companion when every class is present.
double missing_partner(const CooccurrenceModel& stats, ClassId cls, std::span<const ClassId> scene_classes);

FeatureVector featurize(const PairRelation& relation, const ShapeHistogram& shape_a, const CooccurrenceModel& stats,
                        const ShapePrototypes& prototypes, std::span<const ClassId> scene_classes);

// One feature vector per relation of the scene, in relation order.
std::vector<FeatureVector> featurize_scene(const SceneAnalysis& scene, const CooccurrenceModel& stats,
                                           const ShapePrototypes& prototypes);

struct Hyperparams {
    double learning_rate = 0.01;
    int epochs = 50;
    double l2_lambda = 1e-3;
    std::uint64_t seed = 0;
    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

enum class Label { Valid = -1, Contradiction = 1 };

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> feature_means;
    std::vector<double> feature_stds;
    Hyperparams hyperparams;
    std::int64_t n_pos = 0;
    std::int64_t n_neg = 0;
    std::string context = "global";
    friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

inline constexpr double kMinFeatureStd = 1e-6;

// L2-regularised hinge loss, plain SGD with a seeded shuffle per epoch.
// Throws DegenerateTrainingError unless both labels occur.
LinearModel train_linear(std::span<const FeatureVector> features, std::span<const Label> labels,
                         const Hyperparams& hyperparams);

// w . standardise(fv) + b; positive means a contradiction vote.
double score(const LinearModel& model, const FeatureVector& fv);

enum class Aggregation { Majority, MeanThreshold };
std::string_view to_string(Aggregation mode);
Aggregation aggregation_from_string(std::string_view s);

struct AggregateResult {
    bool contradiction = false;
    double confidence = 0.5;
};

AggregateResult aggregate(std::span<const double> margins, Aggregation mode);

struct ContextVerifier {
    CooccurrenceModel stats;
    ShapePrototypes prototypes;
    LinearModel model;
};

struct TrainOptions {
    Hyperparams hyperparams;
    double alpha = kDefaultAlpha;
    int min_area = kDefaultMinArea;
    int distance_bins = kDefaultDistanceBins;
    int min_context_images = 30;
    Aggregation aggregation = Aggregation::Majority;
};

struct VerifierRegistry {
    std::optional<std::string> context_attribute;
    Aggregation aggregation = Aggregation::Majority;
    int min_area = kDefaultMinArea;
    int distance_bins = kDefaultDistanceBins;
    double alpha = kDefaultAlpha;
    std::uint64_t seed = 0;
    ClassMap class_map;
    ContextVerifier global;
    std::map<std::string, ContextVerifier> contexts;

    // Context value named by the record, or nullopt when it falls back to global.
    std::optional<std::string> resolve_context(const AttributeRecord* attributes) const;
    const ContextVerifier& verifier_for(const std::optional<std::string>& context) const;
};

struct PairScore {
    int a_object = 0;
    int b_object = 0;
    ClassId a_class = 0;
    ClassId b_class = 0;
    double margin = 0.0;
};

struct Verdict {
    std::string image_id;
    std::vector<PairScore> pair_scores;
    bool contradiction = false;
    double confidence = 0.5;
    std::string model_used = "global";
};

Verdict verify_with(const LabelGrid& grid, const ContextVerifier& verifier, const VerifierRegistry& registry,
                    const std::string& label);
Verdict verify(const LabelGrid& grid, const VerifierRegistry& registry, const AttributeRecord* attributes = nullptr);

// Valid scenes are the negatives; each scene with two or more objects also
// yields one removal contradiction. Deterministic given the seed.
VerifierRegistry train_registry(std::span<const LabelGrid> train_scenes, const AttributeTable& attributes,
                                const std::optional<std::string>& context_attribute, const TrainOptions& options,
                                std::uint64_t seed);

}  // namespace ctxverify
