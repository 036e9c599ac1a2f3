#pragma once

// Hand-built inputs with hand-tallied expectations.

#include <cmath>
#include <vector>

#include "ctxverify/relations.hpp"
#include "ctxverify/stats.hpp"

namespace fixtures {

using namespace ctxverify;

inline constexpr ClassId kCat = 1;
inline constexpr ClassId kSofa = 2;
inline constexpr ClassId kTv = 3;

struct HandImage {
    std::vector<SceneObject> objects;
    std::vector<PairRelation> relations;
};

inline SceneObject obj(int id, ClassId cls) {
    SceneObject o;
    o.object_id = id;
    o.class_id = cls;
    o.pixel_count = 100;
    return o;
}

inline PairRelation rel(int a, int b, ClassId ca, ClassId cb, Octant o, Proximity p, double rsize, int bin) {
    return PairRelation{a, b, ca, cb, o, p, rsize, 0.0, bin};
}

// Five images over {cat, sofa, tv}:
//   1: cat on sofa          2: cat alone          3: two cats and a sofa
//   4: sofa beside tv       5: tv alone
inline std::vector<HandImage> hand_corpus() {
    const double l2 = std::log(2.0);
    const double l4 = std::log(4.0);
    return {
        {{obj(0, kCat), obj(1, kSofa)},
         {rel(0, 1, kCat, kSofa, Octant::S, Proximity::On, -l4, 0),
          rel(1, 0, kSofa, kCat, Octant::N, Proximity::Under, l4, 0)}},
        {{obj(0, kCat)}, {}},
        {{obj(0, kCat), obj(1, kCat), obj(2, kSofa)},
         {rel(0, 1, kCat, kCat, Octant::E, Proximity::Beside, 0.0, 1),
          rel(1, 0, kCat, kCat, Octant::W, Proximity::Beside, 0.0, 1),
          rel(0, 2, kCat, kSofa, Octant::S, Proximity::On, -l2, 0),
          rel(2, 0, kSofa, kCat, Octant::N, Proximity::Under, l2, 0),
          rel(1, 2, kCat, kSofa, Octant::SW, Proximity::None, -l2, 2),
          rel(2, 1, kSofa, kCat, Octant::NE, Proximity::None, l2, 2)}},
        {{obj(0, kSofa), obj(1, kTv)},
         {rel(0, 1, kSofa, kTv, Octant::E, Proximity::None, l2, 3),
          rel(1, 0, kTv, kSofa, Octant::W, Proximity::None, -l2, 3)}},
        {{obj(0, kTv)}, {}},
    };
}

inline StatsBuilder hand_builder() {
    StatsBuilder b({kCat, kSofa, kTv}, 5);
    for (const auto& img : hand_corpus()) b.accumulate(img.objects, img.relations);
    return b;
}

}  // namespace fixtures
