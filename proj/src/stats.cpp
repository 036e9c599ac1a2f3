#include "ctxverify/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ctxverify/error.hpp"

namespace ctxverify {

namespace {

constexpr double kFixedScale = static_cast<double>(1LL << kSizeFixedBits);

std::int64_t checked_add(std::int64_t x, std::int64_t y) {
    std::int64_t out = 0;
    if (__builtin_add_overflow(x, y, &out)) throw ConsistencyError("count overflow");
    return out;
}

void add_into(std::vector<std::int64_t>& dst, const std::vector<std::int64_t>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = checked_add(dst[i], src[i]);
}

std::vector<double> smooth(std::span<const std::int64_t> counts, double alpha) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    const double denom = total + alpha * static_cast<double>(counts.size());
    std::vector<double> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = (static_cast<double>(counts[i]) + alpha) / denom;
    return out;
}

}  // namespace

std::int64_t to_fixed(double x) { return std::llround(x * kFixedScale); }
double from_fixed(std::int64_t q) { return static_cast<double>(q) / kFixedScale; }

StatsBuilder::StatsBuilder(std::vector<ClassId> classes, int distance_bins) {
    std::sort(classes.begin(), classes.end());
    if (std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
        throw SchemaError("duplicate class id in universe");
    }
    if (distance_bins < 1) throw SchemaError("distance bin count must be positive");
    const std::size_t c = classes.size();
    c_.classes = std::move(classes);
    c_.distance_bins = distance_bins;
    c_.class_images.assign(c, 0);
    c_.presence.assign(c * c, 0);
    c_.position.assign(c * c * kOctantCount, 0);
    c_.proximity.assign(c * c * kProximityCount, 0);
    c_.distance.assign(c * c * static_cast<std::size_t>(distance_bins), 0);
    c_.size.assign(c * c, SizeMoments{});
}

StatsBuilder StatsBuilder::from_raw(RawCounts counts) {
    StatsBuilder shape(counts.classes, counts.distance_bins);
    const RawCounts& want = shape.c_;
    if (counts.classes != want.classes) throw FormatError("class universe must be sorted and unique");
    if (counts.class_images.size() != want.class_images.size() || counts.presence.size() != want.presence.size() ||
        counts.position.size() != want.position.size() || counts.proximity.size() != want.proximity.size() ||
        counts.distance.size() != want.distance.size() || counts.size.size() != want.size.size()) {
        throw FormatError("count table shape does not match class universe");
    }
    auto non_negative = [](const std::vector<std::int64_t>& v) {
        return std::all_of(v.begin(), v.end(), [](std::int64_t x) { return x >= 0; });
    };
    if (counts.images < 0 || !non_negative(counts.class_images) || !non_negative(counts.presence) ||
        !non_negative(counts.position) || !non_negative(counts.proximity) || !non_negative(counts.distance)) {
        throw FormatError("negative count");
    }
    for (const auto& m : counts.size) {
        if (m.n < 0 || m.sum_sq < 0 || (m.n == 0 && (m.sum != 0 || m.sum_sq != 0))) {
            throw FormatError("inconsistent size moments");
        }
    }
    StatsBuilder out;
    out.c_ = std::move(counts);
    return out;
}

bool StatsBuilder::knows(ClassId id) const {
    return std::binary_search(c_.classes.begin(), c_.classes.end(), id);
}

int StatsBuilder::class_index(ClassId id) const {
    auto it = std::lower_bound(c_.classes.begin(), c_.classes.end(), id);
    if (it == c_.classes.end() || *it != id) {
        throw UnknownClassError("class id " + std::to_string(id) + " not in statistics universe");
    }
    return static_cast<int>(it - c_.classes.begin());
}

std::size_t StatsBuilder::pair_index(ClassId a, ClassId b) const {
    return static_cast<std::size_t>(class_index(a)) * c_.classes.size() + static_cast<std::size_t>(class_index(b));
}

std::span<const std::int64_t> StatsBuilder::position(ClassId a, ClassId b) const {
    return std::span(c_.position).subspan(pair_index(a, b) * kOctantCount, kOctantCount);
}

std::span<const std::int64_t> StatsBuilder::proximity(ClassId a, ClassId b) const {
    return std::span(c_.proximity).subspan(pair_index(a, b) * kProximityCount, kProximityCount);
}

std::span<const std::int64_t> StatsBuilder::distance(ClassId a, ClassId b) const {
    const auto k = static_cast<std::size_t>(c_.distance_bins);
    return std::span(c_.distance).subspan(pair_index(a, b) * k, k);
}

void StatsBuilder::accumulate(std::span<const SceneObject> objects, std::span<const PairRelation> relations) {
    std::map<ClassId, int> instances;
    for (const auto& obj : objects) {
        class_index(obj.class_id);
        ++instances[obj.class_id];
    }
    for (const auto& rel : relations) {
        if (!instances.contains(rel.a_class) || !instances.contains(rel.b_class)) {
            throw ConsistencyError("relation references a class absent from the scene objects");
        }
        if (rel.rdist_bin < 0 || rel.rdist_bin >= c_.distance_bins) {
            throw ConsistencyError("relation distance bin outside model range");
        }
    }

    const std::size_t c = c_.classes.size();
    c_.images = checked_add(c_.images, 1);
    for (const auto& [a, na] : instances) {
        const std::size_t ia = static_cast<std::size_t>(class_index(a));
        ++c_.class_images[ia];
        for (const auto& [b, nb] : instances) {
            const std::size_t ib = static_cast<std::size_t>(class_index(b));
            if (a != b || na >= 2) ++c_.presence[ia * c + ib];
        }
    }

    for (const auto& rel : relations) {
        const std::size_t p = pair_index(rel.a_class, rel.b_class);
        ++c_.position[p * kOctantCount + static_cast<std::size_t>(rel.rpos)];
        ++c_.proximity[p * kProximityCount + static_cast<std::size_t>(rel.rprox)];
        ++c_.distance[p * static_cast<std::size_t>(c_.distance_bins) + static_cast<std::size_t>(rel.rdist_bin)];
        SizeMoments& m = c_.size[p];
        m.n = checked_add(m.n, 1);
        m.sum = checked_add(m.sum, to_fixed(rel.rsize));
        m.sum_sq = checked_add(m.sum_sq, to_fixed(rel.rsize * rel.rsize));
    }
}

StatsBuilder merge(const StatsBuilder& x, const StatsBuilder& y) {
    if (x.c_.classes != y.c_.classes || x.c_.distance_bins != y.c_.distance_bins) {
        throw SchemaError("cannot merge statistics over different class universes or bin counts");
    }
    StatsBuilder out = x;
    out.c_.images = checked_add(out.c_.images, y.c_.images);
    add_into(out.c_.class_images, y.c_.class_images);
    add_into(out.c_.presence, y.c_.presence);
    add_into(out.c_.position, y.c_.position);
    add_into(out.c_.proximity, y.c_.proximity);
    add_into(out.c_.distance, y.c_.distance);
    for (std::size_t i = 0; i < out.c_.size.size(); ++i) {
        out.c_.size[i].n = checked_add(out.c_.size[i].n, y.c_.size[i].n);
        out.c_.size[i].sum = checked_add(out.c_.size[i].sum, y.c_.size[i].sum);
        out.c_.size[i].sum_sq = checked_add(out.c_.size[i].sum_sq, y.c_.size[i].sum_sq);
    }
    return out;
}

CooccurrenceModel::CooccurrenceModel(StatsBuilder counts, double alpha) : counts_(std::move(counts)), alpha_(alpha) {
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw SchemaError("smoothing alpha must be a positive number");
    if (counts_.images() == 0) throw EmptyCorpusError("cannot finalize statistics built from zero images");

    const auto& raw = counts_.raw();
    const std::size_t c = raw.classes.size();
    const double images = static_cast<double>(raw.images);
    presence_.resize(c * c);
    size_mean_.resize(c * c);
    size_std_.resize(c * c);
    position_.reserve(raw.position.size());
    proximity_.reserve(raw.proximity.size());
    distance_.reserve(raw.distance.size());
    const auto bins = static_cast<std::size_t>(raw.distance_bins);

    for (std::size_t p = 0; p < c * c; ++p) {
        presence_[p] = (static_cast<double>(raw.presence[p]) + alpha_) / (images + 2.0 * alpha_);
        for (double v : smooth(std::span(raw.position).subspan(p * kOctantCount, kOctantCount), alpha_)) {
            position_.push_back(v);
        }
        for (double v : smooth(std::span(raw.proximity).subspan(p * kProximityCount, kProximityCount), alpha_)) {
            proximity_.push_back(v);
        }
        for (double v : smooth(std::span(raw.distance).subspan(p * bins, bins), alpha_)) distance_.push_back(v);

        const SizeMoments& m = raw.size[p];
        if (m.n == 0) {
            size_mean_[p] = 0.0;
            size_std_[p] = 1.0;
        } else {
            const double n = static_cast<double>(m.n);
            const double mean = from_fixed(m.sum) / n;
            const double var = from_fixed(m.sum_sq) / n - mean * mean;
            size_mean_[p] = mean;
            size_std_[p] = std::max(std::sqrt(std::max(var, 0.0)), kSizeStdFloor);
        }
    }
}

CooccurrenceModel finalize(const StatsBuilder& builder, double alpha) { return CooccurrenceModel(builder, alpha); }

double CooccurrenceModel::presence_prob(ClassId a, ClassId b) const {
    return presence_[static_cast<std::size_t>(counts_.class_index(a)) * counts_.classes().size() +
                     static_cast<std::size_t>(counts_.class_index(b))];
}

double CooccurrenceModel::conditional_presence(ClassId a, ClassId companion) const {
    const double joint = static_cast<double>(counts_.presence(a, companion));
    const double base = static_cast<double>(counts_.class_images(a));
    return (joint + alpha_) / (base + 2.0 * alpha_);
}

std::span<const double> CooccurrenceModel::position_dist(ClassId a, ClassId b) const {
    const std::size_t p = static_cast<std::size_t>(counts_.class_index(a)) * counts_.classes().size() +
                          static_cast<std::size_t>(counts_.class_index(b));
    return std::span(position_).subspan(p * kOctantCount, kOctantCount);
}

std::span<const double> CooccurrenceModel::proximity_dist(ClassId a, ClassId b) const {
    const std::size_t p = static_cast<std::size_t>(counts_.class_index(a)) * counts_.classes().size() +
                          static_cast<std::size_t>(counts_.class_index(b));
    return std::span(proximity_).subspan(p * kProximityCount, kProximityCount);
}

std::span<const double> CooccurrenceModel::distance_dist(ClassId a, ClassId b) const {
    const auto k = static_cast<std::size_t>(counts_.distance_bins());
    const std::size_t p = static_cast<std::size_t>(counts_.class_index(a)) * counts_.classes().size() +
                          static_cast<std::size_t>(counts_.class_index(b));
    return std::span(distance_).subspan(p * k, k);
}

double CooccurrenceModel::position_prob(ClassId a, ClassId b, Octant o) const {
    return position_dist(a, b)[static_cast<std::size_t>(o)];
}

double CooccurrenceModel::proximity_prob(ClassId a, ClassId b, Proximity p) const {
    return proximity_dist(a, b)[static_cast<std::size_t>(p)];
}

double CooccurrenceModel::distance_prob(ClassId a, ClassId b, int bin) const {
    auto dist = distance_dist(a, b);
    if (bin < 0 || bin >= static_cast<int>(dist.size())) throw DimensionError("distance bin out of range");
    return dist[static_cast<std::size_t>(bin)];
}

double CooccurrenceModel::size_mean(ClassId a, ClassId b) const {
    return size_mean_[static_cast<std::size_t>(counts_.class_index(a)) * counts_.classes().size() +
                      static_cast<std::size_t>(counts_.class_index(b))];
}

double CooccurrenceModel::size_std(ClassId a, ClassId b) const {
    return size_std_[static_cast<std::size_t>(counts_.class_index(a)) * counts_.classes().size() +
                     static_cast<std::size_t>(counts_.class_index(b))];
}

double CooccurrenceModel::size_zscore(ClassId a, ClassId b, double log_ratio) const {
    return (log_ratio - size_mean(a, b)) / size_std(a, b);
}

double CooccurrenceModel::query(QueryKind kind, ClassId a, ClassId b, int observed) const {
    switch (kind) {
        case QueryKind::Presence:
            return presence_prob(a, b);
        case QueryKind::Position:
            if (observed < 0 || observed >= kOctantCount) throw DimensionError("octant index out of range");
            return position_prob(a, b, static_cast<Octant>(observed));
        case QueryKind::Proximity:
            if (observed < 0 || observed >= kProximityCount) throw DimensionError("proximity index out of range");
            return proximity_prob(a, b, static_cast<Proximity>(observed));
        case QueryKind::Distance:
            return distance_prob(a, b, observed);
    }
    throw DimensionError("unknown query kind");
}

}  // namespace ctxverify
