#include "ctxverify/relations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctxverify/error.hpp"

namespace ctxverify {

namespace {

constexpr std::array<std::string_view, kOctantCount> kOctantNames = {"E", "NE", "N", "NW", "W", "SW", "S", "SE"};
constexpr std::array<std::string_view, kProximityCount> kProximityNames = {"ON",     "UNDER",  "FRONT",
                                                                           "BACK",   "BESIDE", "NONE"};

// tan(22.5 deg) and tan(67.5 deg)
const double kTanLow = std::numbers::sqrt2 - 1.0;
const double kTanHigh = std::numbers::sqrt2 + 1.0;

// Octant of a vector in the upper half plane [0, 180) degrees; dy is "up".
Octant upper_octant(double dx, double dy) {
    if (dx > 0) {
        if (dy < kTanLow * dx) return Octant::E;
        if (dy < kTanHigh * dx) return Octant::NE;
        return Octant::N;
    }
    if (dx == 0) return Octant::N;
    const double ax = -dx;
    if (dy <= kTanLow * ax) return Octant::W;
    if (dy <= kTanHigh * ax) return Octant::NW;
    return Octant::N;
}

bool strictly_inside(const BBox& inner, const BBox& outer) {
    return inner.min_row > outer.min_row && inner.max_row < outer.max_row && inner.min_col > outer.min_col &&
           inner.max_col < outer.max_col;
}

}  // namespace

std::string_view to_string(Octant o) { return kOctantNames[static_cast<int>(o)]; }
std::string_view to_string(Proximity p) { return kProximityNames[static_cast<int>(p)]; }

Octant octant_from_string(std::string_view s) {
    for (int i = 0; i < kOctantCount; ++i) {
        if (kOctantNames[i] == s) return static_cast<Octant>(i);
    }
    throw FormatError("unknown octant '" + std::string(s) + "'");
}

Proximity proximity_from_string(std::string_view s) {
    for (int i = 0; i < kProximityCount; ++i) {
        if (kProximityNames[i] == s) return static_cast<Proximity>(i);
    }
    throw FormatError("unknown proximity label '" + std::string(s) + "'");
}

Octant octant(Point a_centroid, Point b_centroid) {
    const double dx = b_centroid.col - a_centroid.col;
    const double dy = a_centroid.row - b_centroid.row;
    if (dx == 0 && dy == 0) throw DegeneratePairError("identical centroids");
    // Lower half plane is folded onto the upper one so that reversing the
    // pair always yields the opposite sector.
    if (dy < 0 || (dy == 0 && dx < 0)) return opposite(upper_octant(-dx, -dy));
    return upper_octant(dx, dy);
}

bool contact(const LabelGrid& grid, const SceneObject& a, const SceneObject& b) {
    if (a.bbox.max_row + 1 < b.bbox.min_row || b.bbox.max_row + 1 < a.bbox.min_row ||
        a.bbox.max_col + 1 < b.bbox.min_col || b.bbox.max_col + 1 < a.bbox.min_col) {
        return false;
    }
    const SceneObject& small = a.pixel_count <= b.pixel_count ? a : b;
    const SceneObject& large = a.pixel_count <= b.pixel_count ? b : a;
    const int w = grid.width();
    for (int idx : small.pixels) {
        const int r = idx / w;
        const int c = idx % w;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const int nr = r + dr;
                const int nc = c + dc;
                if (!grid.contains(nr, nc)) continue;
                if (std::binary_search(large.pixels.begin(), large.pixels.end(), nr * w + nc)) return true;
            }
        }
    }
    return false;
}

Proximity proximity_relation(const SceneObject& a, const SceneObject& b, bool in_contact, int image_height) {
    const double eps = 0.05 * image_height;
    if (strictly_inside(a.bbox, b.bbox)) return Proximity::Front;
    if (strictly_inside(b.bbox, a.bbox)) return Proximity::Back;
    if (!in_contact) return Proximity::None;
    if (a.centroid.row < b.centroid.row - eps) return Proximity::On;
    if (a.centroid.row > b.centroid.row + eps) return Proximity::Under;
    return Proximity::Beside;
}

double size_log_ratio(const SceneObject& a, const SceneObject& b) {
    // Difference of logs keeps rsize(a, b) == -rsize(b, a) bit for bit.
    return std::log(static_cast<double>(a.pixel_count)) - std::log(static_cast<double>(b.pixel_count));
}

double norm_distance(const SceneObject& a, const SceneObject& b, const LabelGrid& grid) {
    const double diag = std::hypot(static_cast<double>(grid.height()), static_cast<double>(grid.width()));
    return std::hypot(a.centroid.row - b.centroid.row, a.centroid.col - b.centroid.col) / diag;
}

int distance_bin(double rdist, int bins) {
    const int bin = static_cast<int>(std::floor(rdist * bins));
    return std::clamp(bin, 0, bins - 1);
}

namespace {

// Outer pixel-edge outline of an 8-connected component, traced clockwise on
// screen from the top-left corner of its first raster pixel. Vertices are
// grid corners; every step has unit length.
std::vector<PixelCoord> trace_outline(const LabelGrid& grid, const SceneObject& object) {
    const int w = grid.width();
    const BBox& bb = object.bbox;
    const int mh = bb.max_row - bb.min_row + 3;
    const int mw = bb.max_col - bb.min_col + 3;
    std::vector<char> mask(static_cast<std::size_t>(mh) * mw, 0);
    for (int idx : object.pixels) {
        mask[static_cast<std::size_t>(idx / w - bb.min_row + 1) * mw + (idx % w - bb.min_col + 1)] = 1;
    }
    auto fg = [&](int r, int c) { return mask[static_cast<std::size_t>(r) * mw + c] != 0; };

    // E, S, W, N; turning right is +1.
    constexpr int kDr[4] = {0, 1, 0, -1};
    constexpr int kDc[4] = {1, 0, -1, 0};
    // Pixel offsets (relative to the vertex) ahead-left and ahead-right of each direction.
    constexpr int kAheadLeft[4][2] = {{-1, 0}, {0, 0}, {0, -1}, {-1, -1}};
    constexpr int kAheadRight[4][2] = {{0, 0}, {0, -1}, {-1, -1}, {-1, 0}};

    const int first = object.pixels.front();
    const PixelCoord start{first / w - bb.min_row + 1, first % w - bb.min_col + 1};
    std::vector<PixelCoord> out;
    PixelCoord v = start;
    int dir = 0;
    do {
        out.push_back({v.row + bb.min_row - 1, v.col + bb.min_col - 1});
        v = {v.row + kDr[dir], v.col + kDc[dir]};
        if (fg(v.row + kAheadLeft[dir][0], v.col + kAheadLeft[dir][1])) {
            dir = (dir + 3) % 4;
        } else if (!fg(v.row + kAheadRight[dir][0], v.col + kAheadRight[dir][1])) {
            dir = (dir + 1) % 4;
        }
    } while (!(v == start && dir == 0));
    return out;
}

}  // namespace

ShapeHistogram shape_histogram(const LabelGrid& grid, const SceneObject& object, int n_samples, int n_bins) {
    ShapeHistogram hist{std::vector<double>(static_cast<std::size_t>(n_bins), 0.0)};
    if (object.pixel_count <= 1 || n_samples <= 0) {
        hist.bins.back() = 1.0;
        return hist;
    }
    const auto outline = trace_outline(grid, object);
    const std::size_t m = outline.size();

    // Corner (r, c) sits at (r - 1/2, c - 1/2) in pixel-centre coordinates.
    // Offsets from the centroid are scaled by 2n and kept integral, so the
    // histogram is bit-identical under translation.
    const int w = grid.width();
    long long sum_r = 0;
    long long sum_c = 0;
    for (int idx : object.pixels) {
        sum_r += idx / w;
        sum_c += idx % w;
    }
    const long long n = object.pixel_count;
    std::vector<Point> rel(m);
    for (std::size_t i = 0; i < m; ++i) {
        rel[i] = {static_cast<double>(2 * n * outline[i].row - n - 2 * sum_r),
                  static_cast<double>(2 * n * outline[i].col - n - 2 * sum_c)};
    }

    std::vector<double> dist(static_cast<std::size_t>(n_samples));
    const auto perimeter = static_cast<double>(m);
    for (int k = 0; k < n_samples; ++k) {
        const double s = perimeter * k / n_samples;
        const auto i = std::min(static_cast<std::size_t>(s), m - 1);
        const double f = s - static_cast<double>(i);
        const Point& p = rel[i];
        const Point& q = rel[(i + 1) % m];
        dist[k] = std::hypot(p.row + f * (q.row - p.row), p.col + f * (q.col - p.col));
    }

    const double max_d = *std::max_element(dist.begin(), dist.end());
    for (double d : dist) {
        const int bin = std::min(static_cast<int>(d / max_d * n_bins), n_bins - 1);
        hist.bins[bin] += 1.0;
    }
    for (double& b : hist.bins) b /= n_samples;
    return hist;
}

double l1_distance(const ShapeHistogram& x, const ShapeHistogram& y) {
    if (x.bins.size() != y.bins.size()) throw DimensionError("shape histograms differ in bin count");
    double total = 0.0;
    for (std::size_t i = 0; i < x.bins.size(); ++i) total += std::abs(x.bins[i] - y.bins[i]);
    return total;
}

PairRelation pair_relation(const LabelGrid& grid, const SceneObject& a, const SceneObject& b, int distance_bins) {
    PairRelation rel;
    rel.a_object = a.object_id;
    rel.b_object = b.object_id;
    rel.a_class = a.class_id;
    rel.b_class = b.class_id;
    rel.rpos = octant(a.centroid, b.centroid);
    rel.rprox = proximity_relation(a, b, contact(grid, a, b), grid.height());
    rel.rsize = size_log_ratio(a, b);
    rel.rdist = norm_distance(a, b, grid);
    rel.rdist_bin = distance_bin(rel.rdist, distance_bins);
    return rel;
}

SceneAnalysis analyze_scene(const LabelGrid& grid, int min_area, int distance_bins) {
    SceneAnalysis scene;
    scene.objects = extract_objects(grid, min_area);
    scene.shapes.reserve(scene.objects.size());
    for (const auto& obj : scene.objects) scene.shapes.push_back(shape_histogram(grid, obj));
    for (const auto& a : scene.objects) {
        for (const auto& b : scene.objects) {
            if (a.object_id == b.object_id || a.centroid == b.centroid) continue;
            scene.relations.push_back(pair_relation(grid, a, b, distance_bins));
        }
    }
    return scene;
}

}  // namespace ctxverify
