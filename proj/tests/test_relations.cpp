#include <doctest.h>

#include <numeric>

#include "ctxverify/error.hpp"
#include "ctxverify/relations.hpp"
#include "support.hpp"

using namespace ctxverify;
using namespace testsupport;

namespace {

SceneObject only_object(const LabelGrid& g) {
    auto objs = extract_objects(g, 1);
    REQUIRE(objs.size() == 1);
    return objs[0];
}

std::pair<SceneObject, SceneObject> two_objects(const LabelGrid& g) {
    auto objs = extract_objects(g, 1);
    REQUIRE(objs.size() == 2);
    return {objs[0], objs[1]};
}

}  // namespace

TEST_CASE("axis-aligned octants") {
    CHECK(octant({10, 10}, {10, 20}) == Octant::E);
    CHECK(octant({10, 10}, {5, 10}) == Octant::N);
    CHECK(octant({10, 10}, {10, 0}) == Octant::W);
    CHECK(octant({10, 10}, {15, 10}) == Octant::S);
    CHECK(octant({10, 10}, {5, 15}) == Octant::NE);
    CHECK(octant({10, 10}, {15, 5}) == Octant::SW);
    CHECK_THROWS_AS(octant({1, 1}, {1, 1}), DegeneratePairError);
}

TEST_CASE("octant matches the atan2 sector oracle") {
    Rng rng(21);
    for (int t = 0; t < 10000; ++t) {
        const Point a{rng.uniform(0, 100), rng.uniform(0, 100)};
        const Point b{rng.uniform(0, 100), rng.uniform(0, 100)};
        CHECK(static_cast<int>(octant(a, b)) == octant_oracle(a.row, a.col, b.row, b.col));
        CHECK(octant(b, a) == opposite(octant(a, b)));
    }
}

TEST_CASE("octant duality on integer lattice points including sector edges") {
    for (int dr = -6; dr <= 6; ++dr) {
        for (int dc = -6; dc <= 6; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const Point a{50, 50};
            const Point b{50.0 + dr, 50.0 + dc};
            CHECK(octant(b, a) == opposite(octant(a, b)));
        }
    }
}

TEST_CASE("octant names round-trip") {
    for (int i = 0; i < kOctantCount; ++i) {
        const auto o = static_cast<Octant>(i);
        CHECK(octant_from_string(to_string(o)) == o);
    }
    for (int i = 0; i < kProximityCount; ++i) {
        const auto p = static_cast<Proximity>(i);
        CHECK(proximity_from_string(to_string(p)) == p);
    }
    CHECK_THROWS_AS(octant_from_string("UP"), FormatError);
}

TEST_CASE("contact on rectangles") {
    const auto touching = paint(10, 10, {{rect(0, 0, 3, 3), 1}, {rect(0, 3, 3, 3), 2}}, 2);
    auto [a, b] = two_objects(touching);
    CHECK(contact(touching, a, b));
    const auto gap = paint(10, 10, {{rect(0, 0, 3, 3), 1}, {rect(0, 5, 3, 3), 2}}, 2);
    auto [c, d] = two_objects(gap);
    CHECK_FALSE(contact(gap, c, d));
    const auto corner = paint(10, 10, {{rect(0, 0, 3, 3), 1}, {rect(3, 3, 3, 3), 2}}, 2);
    auto [e, f] = two_objects(corner);
    CHECK(contact(corner, e, f));
}

TEST_CASE("contact matches the exhaustive pixel-pair oracle") {
    Rng rng(22);
    for (int t = 0; t < 200; ++t) {
        const int h = 30, w = 30;
        const auto blob_a = random_blob(rng, 0, 0, 18, 18, rng.uniform_int(1, 60));
        auto blob_b = random_blob(rng, rng.uniform_int(0, 12), rng.uniform_int(0, 12), 18, 18, rng.uniform_int(1, 60));
        for (const auto& p : blob_a) blob_b.erase(p);
        if (blob_b.empty()) continue;
        const auto g = paint(h, w, {{blob_a, 1}, {blob_b, 2}}, 2);
        const auto objs = extract_objects(g, 1);
        const bool expected = contact_oracle(blob_a, blob_b);
        for (const auto& x : objs) {
            for (const auto& y : objs) {
                if (x.class_id != 1 || y.class_id != 2) continue;
                PixelSet xs, ys;
                for (int i : x.pixels) xs.insert({i / w, i % w});
                for (int i : y.pixels) ys.insert({i / w, i % w});
                CHECK(contact(g, x, y) == contact_oracle(xs, ys));
                CHECK(contact(g, y, x) == contact(g, x, y));
            }
        }
        bool any = false;
        for (const auto& x : objs) {
            for (const auto& y : objs) {
                if (x.class_id == 1 && y.class_id == 2) any = any || contact(g, x, y);
            }
        }
        CHECK(any == expected);
    }
}

TEST_CASE("proximity labels") {
    const int h = 100;
    SUBCASE("stacked touching") {
        const auto g = paint(h, 40, {{rect(10, 10, 10, 10), 1}, {rect(20, 5, 20, 20), 2}}, 2);
        auto [top, bottom] = two_objects(g);
        REQUIRE(top.class_id == 1);
        CHECK(proximity_relation(top, bottom, contact(g, top, bottom), h) == Proximity::On);
        CHECK(proximity_relation(bottom, top, contact(g, top, bottom), h) == Proximity::Under);
        const auto rel = pair_relation(g, top, bottom);
        CHECK(rel.rpos == Octant::S);
        CHECK(rel.rprox == Proximity::On);
        CHECK(pair_relation(g, bottom, top).rpos == Octant::N);
    }
    SUBCASE("containment") {
        const auto g = paint(h, 40, {{rect(10, 10, 30, 30), 2}, {rect(20, 20, 5, 5), 1}}, 2);
        auto objs = extract_objects(g, 1);
        REQUIRE(objs.size() == 2);
        const auto& big = objs[0].class_id == 2 ? objs[0] : objs[1];
        const auto& small = objs[0].class_id == 1 ? objs[0] : objs[1];
        CHECK(proximity_relation(small, big, contact(g, small, big), h) == Proximity::Front);
        CHECK(proximity_relation(big, small, contact(g, small, big), h) == Proximity::Back);
    }
    SUBCASE("side by side") {
        const auto g = paint(h, 40, {{rect(10, 0, 10, 10), 1}, {rect(10, 10, 10, 10), 2}}, 2);
        auto [a, b] = two_objects(g);
        CHECK(proximity_relation(a, b, contact(g, a, b), h) == Proximity::Beside);
    }
    SUBCASE("far apart") {
        const auto g = paint(h, 40, {{rect(0, 0, 5, 5), 1}, {rect(80, 30, 5, 5), 2}}, 2);
        auto [a, b] = two_objects(g);
        CHECK(proximity_relation(a, b, contact(g, a, b), h) == Proximity::None);
    }
}

TEST_CASE("vertical proximity anti-duality on random touching pairs") {
    Rng rng(23);
    for (int t = 0; t < 200; ++t) {
        const int h = 40;
        const auto a = random_blob(rng, 0, 0, 20, 30, rng.uniform_int(5, 60));
        auto b = random_blob(rng, rng.uniform_int(0, 15), 0, 20, 30, rng.uniform_int(5, 60));
        for (const auto& p : a) b.erase(p);
        if (b.empty()) continue;
        const auto g = paint(h, 30, {{a, 1}, {b, 2}}, 2);
        const auto objs = extract_objects(g, 1);
        for (const auto& x : objs) {
            for (const auto& y : objs) {
                if (x.object_id == y.object_id) continue;
                const bool c = contact(g, x, y);
                const auto xy = proximity_relation(x, y, c, h);
                const auto yx = proximity_relation(y, x, c, h);
                if (xy == Proximity::On) CHECK(yx == Proximity::Under);
                if (xy == Proximity::Front) CHECK(yx == Proximity::Back);
                if (xy == Proximity::Beside) CHECK(yx == Proximity::Beside);
                if (xy == Proximity::None) CHECK(yx == Proximity::None);
                if (!c && xy != Proximity::Front && xy != Proximity::Back) CHECK(xy == Proximity::None);
            }
        }
    }
}

TEST_CASE("size log ratio") {
    const auto g = paint(20, 40, {{rect(0, 0, 10, 10), 1}, {rect(0, 20, 5, 10), 2}}, 2);
    auto [a, b] = two_objects(g);
    CHECK(size_log_ratio(a, b) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    CHECK(size_log_ratio(b, a) == -size_log_ratio(a, b));
    CHECK(size_log_ratio(a, a) == 0.0);
}

TEST_CASE("normalized distance") {
    const auto g = paint(30, 40, {{rect(0, 0, 1, 1), 1}, {rect(29, 39, 1, 1), 2}}, 2);
    auto [a, b] = two_objects(g);
    const double diag = std::hypot(30.0, 40.0);
    const double d = norm_distance(a, b, g);
    CHECK(d <= 1.0);
    CHECK(d >= 1.0 - 2.0 / diag);
    CHECK(d == norm_distance(b, a, g));
    CHECK(norm_distance(a, a, g) == 0.0);
    CHECK(distance_bin(0.0) == 0);
    CHECK(distance_bin(0.19999) == 0);
    CHECK(distance_bin(0.2) == 1);
    CHECK(distance_bin(1.0) == 4);
    CHECK(distance_bin(0.5, 3) == 1);
}

TEST_CASE("pair relation equals its components and reverses correctly") {
    Rng rng(24);
    for (int t = 0; t < 100; ++t) {
        const int h = 40, w = 50;
        const auto a = fill_holes(random_blob(rng, 0, 0, 25, 25, rng.uniform_int(10, 120)), h, w);
        auto b = random_blob(rng, rng.uniform_int(0, 14), rng.uniform_int(0, 24), 25, 25, rng.uniform_int(10, 120));
        for (const auto& p : a) b.erase(p);
        const auto g = paint(h, w, {{a, 1}, {b, 2}}, 2);
        const auto objs = extract_objects(g, 1);
        for (const auto& x : objs) {
            for (const auto& y : objs) {
                if (x.object_id == y.object_id || x.centroid == y.centroid) continue;
                const auto r = pair_relation(g, x, y);
                const auto s = pair_relation(g, y, x);
                CHECK(r.rpos == octant(x.centroid, y.centroid));
                CHECK(r.rprox == proximity_relation(x, y, contact(g, x, y), h));
                CHECK(r.rsize == doctest::Approx(std::log(static_cast<double>(x.pixel_count) / y.pixel_count)).epsilon(1e-12));
                const double dist = std::hypot(x.centroid.row - y.centroid.row, x.centroid.col - y.centroid.col) /
                                    std::hypot(static_cast<double>(h), static_cast<double>(w));
                CHECK(r.rdist == doctest::Approx(dist).epsilon(1e-12));
                CHECK(r.rdist_bin == std::min(4, static_cast<int>(std::floor(r.rdist * 5))));
                CHECK(s.rpos == opposite(r.rpos));
                CHECK(s.rsize == -r.rsize);
                CHECK(s.rdist == r.rdist);
            }
        }
    }
}

TEST_CASE("shape histogram basics") {
    const auto g = paint(40, 40, {{disk(20, 20, 10), 1}}, 1);
    const auto h = shape_histogram(g, only_object(g));
    REQUIRE(h.bins.size() == static_cast<std::size_t>(kDefaultShapeBins));
    CHECK(std::accumulate(h.bins.begin(), h.bins.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    const double top3 = h.bins[13] + h.bins[14] + h.bins[15];
    CHECK(top3 >= 0.9);

    const auto dot = paint(5, 5, {{rect(2, 2, 1, 1), 1}}, 1);
    const auto hd = shape_histogram(dot, only_object(dot));
    CHECK(hd.bins.back() == 1.0);

    CHECK(l1_distance(h, h) == 0.0);
}

TEST_CASE("shape histogram translation invariance and scale robustness") {
    Rng rng(25);
    for (int t = 0; t < 50; ++t) {
        const auto blob = fill_holes(random_blob(rng, 0, 0, 20, 20, rng.uniform_int(30, 200)), 20, 20);
        const int dr = rng.uniform_int(1, 30), dc = rng.uniform_int(1, 30);
        const auto g1 = paint(60, 60, {{translate(blob, 2, 2), 1}}, 1);
        const auto g2 = paint(60, 60, {{translate(blob, 2 + dr, 2 + dc), 1}}, 1);
        CHECK(shape_histogram(g1, only_object(g1)) == shape_histogram(g2, only_object(g2)));
    }
}

TEST_CASE("analyze_scene covers every ordered pair with distinct centroids") {
    Rng rng(26);
    const auto g = random_grid(rng, 30, 30, 3, 0.7);
    const auto scene = analyze_scene(g, 3);
    std::size_t expected = 0;
    for (const auto& x : scene.objects) {
        for (const auto& y : scene.objects) {
            if (x.object_id != y.object_id && !(x.centroid == y.centroid)) ++expected;
        }
    }
    CHECK(scene.relations.size() == expected);
    CHECK(scene.shapes.size() == scene.objects.size());
}

TEST_CASE("shape histogram is robust to 2x upscaling") {
    Rng rng(27);
    for (int t = 0; t < 50; ++t) {
        const auto blob = fill_holes(random_blob(rng, 0, 0, 24, 24, rng.uniform_int(80, 300)), 24, 24);
        const auto g1 = paint(60, 60, {{translate(blob, 2, 2), 1}}, 1);
        const auto g2 = paint(60, 60, {{upscale2(blob), 1}}, 1);
        const double d = l1_distance(shape_histogram(g1, only_object(g1)), shape_histogram(g2, only_object(g2)));
        CHECK(d <= 0.15);
    }
}
