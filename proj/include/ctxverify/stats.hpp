#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ctxverify/relations.hpp"

namespace ctxverify {

inline constexpr double kDefaultAlpha = 1.0;
inline constexpr double kSizeStdFloor = 0.1;
// Size log-ratio moments are accumulated in fixed point so that shard merges
// are bit-identical to sequential accumulation regardless of order.
inline constexpr int kSizeFixedBits = 32;

struct SizeMoments {
    std::int64_t n = 0;
    std::int64_t sum = 0;     // sum of x, fixed point
    std::int64_t sum_sq = 0;  // sum of x^2, fixed point
    friend bool operator==(const SizeMoments&, const SizeMoments&) = default;
};

// Dense C x C tables, row = first class of the ordered pair. Categorical
// tables store their categories contiguously per pair.
struct RawCounts {
    std::vector<ClassId> classes;
    int distance_bins = kDefaultDistanceBins;
    std::int64_t images = 0;
    std::vector<std::int64_t> class_images;
    std::vector<std::int64_t> presence;
    std::vector<std::int64_t> position;
    std::vector<std::int64_t> proximity;
    std::vector<std::int64_t> distance;
    std::vector<SizeMoments> size;
    friend bool operator==(const RawCounts&, const RawCounts&) = default;
};

// Raw co-occurrence counts over a fixed class universe.
class StatsBuilder {
public:
    StatsBuilder() = default;
    StatsBuilder(std::vector<ClassId> classes, int distance_bins = kDefaultDistanceBins);

    // Counts presence once per image and relations once per ordered pair.
    void accumulate(std::span<const SceneObject> objects, std::span<const PairRelation> relations);
    void accumulate(const SceneAnalysis& scene) { accumulate(scene.objects, scene.relations); }

    std::span<const ClassId> classes() const { return c_.classes; }
    int class_count() const { return static_cast<int>(c_.classes.size()); }
    int distance_bins() const { return c_.distance_bins; }
    bool knows(ClassId id) const;
    int class_index(ClassId id) const;  // throws UnknownClassError

    std::int64_t images() const { return c_.images; }
    std::int64_t class_images(ClassId a) const { return c_.class_images[class_index(a)]; }
    std::int64_t presence(ClassId a, ClassId b) const { return c_.presence[pair_index(a, b)]; }
    std::span<const std::int64_t> position(ClassId a, ClassId b) const;
    std::span<const std::int64_t> proximity(ClassId a, ClassId b) const;
    std::span<const std::int64_t> distance(ClassId a, ClassId b) const;
    const SizeMoments& size(ClassId a, ClassId b) const { return c_.size[pair_index(a, b)]; }

    const RawCounts& raw() const { return c_; }
    // Validates shapes and non-negativity; throws FormatError.
    static StatsBuilder from_raw(RawCounts counts);

    friend bool operator==(const StatsBuilder&, const StatsBuilder&) = default;
    friend StatsBuilder merge(const StatsBuilder& x, const StatsBuilder& y);

private:
    std::size_t pair_index(ClassId a, ClassId b) const;

    RawCounts c_;
};

// Element-wise sum; throws SchemaError when class universes or bin counts differ.
StatsBuilder merge(const StatsBuilder& x, const StatsBuilder& y);

std::int64_t to_fixed(double x);
double from_fixed(std::int64_t q);

enum class QueryKind { Presence, Position, Proximity, Distance };

// Laplace-smoothed tables derived from a StatsBuilder. Immutable.
class CooccurrenceModel {
public:
    CooccurrenceModel(StatsBuilder counts, double alpha);

    const StatsBuilder& counts() const { return counts_; }
    double alpha() const { return alpha_; }
    std::int64_t images() const { return counts_.images(); }
    std::span<const ClassId> classes() const { return counts_.classes(); }

    // P(both classes in an image); for a == b, P(at least two instances).
    double presence_prob(ClassId a, ClassId b) const;
    // P(companion present | a present), from the same presence table.
    double conditional_presence(ClassId a, ClassId companion) const;
    double position_prob(ClassId a, ClassId b, Octant o) const;
    double proximity_prob(ClassId a, ClassId b, Proximity p) const;
    double distance_prob(ClassId a, ClassId b, int bin) const;
    double size_mean(ClassId a, ClassId b) const;
    double size_std(ClassId a, ClassId b) const;
    double size_zscore(ClassId a, ClassId b, double log_ratio) const;

    double query(QueryKind kind, ClassId a, ClassId b, int observed) const;

    std::span<const double> position_dist(ClassId a, ClassId b) const;
    std::span<const double> proximity_dist(ClassId a, ClassId b) const;
    std::span<const double> distance_dist(ClassId a, ClassId b) const;

private:
    StatsBuilder counts_;
    double alpha_;
    std::vector<double> presence_;
    std::vector<double> position_;
    std::vector<double> proximity_;
    std::vector<double> distance_;
    std::vector<double> size_mean_;
    std::vector<double> size_std_;
};

// Throws EmptyCorpusError when no image has been accumulated.
CooccurrenceModel finalize(const StatsBuilder& builder, double alpha = kDefaultAlpha);

}  // namespace ctxverify
