#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "ctxverify/label_grid.hpp"

namespace ctxverify {

// Direction from A's centroid to B's centroid, counter-clockwise from east.
enum class Octant : int { E = 0, NE, N, NW, W, SW, S, SE };
inline constexpr int kOctantCount = 8;

enum class Proximity : int { On = 0, Under, Front, Back, Beside, None };
inline constexpr int kProximityCount = 6;

inline constexpr int kDefaultDistanceBins = 5;
inline constexpr int kDefaultShapeSamples = 64;
inline constexpr int kDefaultShapeBins = 16;

constexpr Octant opposite(Octant o) { return static_cast<Octant>((static_cast<int>(o) + 4) % kOctantCount); }
std::string_view to_string(Octant o);
std::string_view to_string(Proximity p);
Octant octant_from_string(std::string_view s);
Proximity proximity_from_string(std::string_view s);

struct PairRelation {
    int a_object = 0;
    int b_object = 0;
    ClassId a_class = 0;
    ClassId b_class = 0;
    Octant rpos = Octant::E;
    Proximity rprox = Proximity::None;
    double rsize = 0.0;  // ln(|A| / |B|)
    double rdist = 0.0;  // centroid distance / image diagonal
    int rdist_bin = 0;
    friend bool operator==(const PairRelation&, const PairRelation&) = default;
};

struct ShapeHistogram {
    std::vector<double> bins;
    friend bool operator==(const ShapeHistogram&, const ShapeHistogram&) = default;
};

// Half-open 45 degree sectors centred on the compass directions, "up" being
// decreasing row. Exactly antisymmetric: octant(b, a) == opposite(octant(a, b)).
Octant octant(Point a_centroid, Point b_centroid);

// True iff some pixel of A and some pixel of B are within Chebyshev distance 1.
bool contact(const LabelGrid& grid, const SceneObject& a, const SceneObject& b);

// Containment (FRONT/BACK) takes precedence over the vertical contact
// relations; the row tolerance is 5% of the image height.
Proximity proximity_relation(const SceneObject& a, const SceneObject& b, bool in_contact, int image_height);

double size_log_ratio(const SceneObject& a, const SceneObject& b);
double norm_distance(const SceneObject& a, const SceneObject& b, const LabelGrid& grid);
int distance_bin(double rdist, int bins = kDefaultDistanceBins);

// Distances to the centroid sampled at uniform arc length along the object's
// outer pixel-edge outline, normalised by the largest sample. Single pixels
// put all mass in the last bin.
ShapeHistogram shape_histogram(const LabelGrid& grid, const SceneObject& object, int n_samples = kDefaultShapeSamples,
                               int n_bins = kDefaultShapeBins);
double l1_distance(const ShapeHistogram& x, const ShapeHistogram& y);

PairRelation pair_relation(const LabelGrid& grid, const SceneObject& a, const SceneObject& b,
                           int distance_bins = kDefaultDistanceBins);

// Everything the statistics and verifier need from one scene.
struct SceneAnalysis {
    std::vector<SceneObject> objects;
    std::vector<PairRelation> relations;  // every ordered pair with distinct centroids
    std::vector<ShapeHistogram> shapes;   // indexed like objects
};

SceneAnalysis analyze_scene(const LabelGrid& grid, int min_area = kDefaultMinArea,
                            int distance_bins = kDefaultDistanceBins);

}  // namespace ctxverify
