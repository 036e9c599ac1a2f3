#include "ctxverify/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "ctxverify/error.hpp"

namespace ctxverify {

namespace {

using nlohmann::json;

constexpr int kGroupAttempts = 60;
constexpr int kSceneAttempts = 25;
constexpr int kMinObjectPixels = 30;

constexpr const char* kDefaultConfigJson = R"json({
  "schema_version": 1,
  "height": 96,
  "width": 128,
  "images_per_context": 450,
  "val_fraction": 0.3,
  "attribute_missing_rate": 0.01,
  "context_attribute": "location",
  "classes": {
    "1": "sofa", "2": "cat", "3": "tvmonitor", "4": "pottedplant", "5": "diningtable",
    "6": "chair", "7": "bottle", "8": "horse", "9": "person", "10": "car",
    "11": "bicycle", "12": "sheep", "13": "bird"
  },
  "attributes": {
    "location": ["inside", "outside"],
    "multiplicity": ["single", "multiple"],
    "rigidity": ["soft", "hard"],
    "visibility": ["full", "partial"]
  },
  "contexts": {
    "inside": {
      "groups_per_image": [1, 2],
      "groups": [
        {"weight": 1.0, "members": [
          {"class": "sofa", "shape": "rect", "area": [1000, 1600], "aspect": [0.45, 0.6]},
          {"class": "cat", "shape": "ellipse", "placement": "on", "anchor": 0, "size_log_ratio": [-2.3, 0.25], "aspect": [0.55, 0.8]}
        ]},
        {"weight": 1.0, "members": [
          {"class": "diningtable", "shape": "rect", "area": [800, 1200], "aspect": [0.3, 0.45]},
          {"class": "bottle", "shape": "rect", "placement": "on", "anchor": 0, "size_log_ratio": [-3.0, 0.25], "aspect": [2.0, 3.0]},
          {"class": "chair", "shape": "rect", "placement": "beside", "anchor": 0, "size_log_ratio": [-0.8, 0.2], "aspect": [1.3, 1.7], "probability": 0.95}
        ]},
        {"weight": 1.0, "members": [
          {"class": "tvmonitor", "shape": "rect", "area": [450, 700], "aspect": [0.65, 0.8]},
          {"class": "pottedplant", "shape": "ellipse", "placement": "near", "anchor": 0, "size_log_ratio": [-0.7, 0.25], "aspect": [1.2, 1.6], "probability": 0.95}
        ]}
      ]
    },
    "outside": {
      "groups_per_image": [1, 2],
      "groups": [
        {"weight": 1.0, "members": [
          {"class": "horse", "shape": "ellipse", "area": [900, 1400], "aspect": [0.55, 0.7]},
          {"class": "person", "shape": "rect", "placement": "on", "anchor": 0, "size_log_ratio": [-1.5, 0.25], "aspect": [1.8, 2.4], "probability": 0.6}
        ]},
        {"weight": 1.0, "members": [
          {"class": "car", "shape": "rect", "area": [900, 1300], "aspect": [0.4, 0.5]},
          {"class": "bicycle", "shape": "ellipse", "placement": "beside", "anchor": 0, "size_log_ratio": [-1.3, 0.25], "aspect": [0.6, 0.8], "probability": 0.4}
        ]},
        {"weight": 1.0, "members": [
          {"class": "sheep", "shape": "ellipse", "area": [400, 650], "aspect": [0.6, 0.8]},
          {"class": "bird", "shape": "ellipse", "placement": "near", "anchor": 0, "size_log_ratio": [-2.2, 0.25], "aspect": [0.6, 0.9], "probability": 0.4}
        ]}
      ]
    }
  }
}
)json";

Range parse_range(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw FormatError(std::string(what) + " must be a [lo, hi] pair");
    }
    Range r{j[0].get<double>(), j[1].get<double>()};
    if (!(r.lo > 0) || r.hi < r.lo) throw SchemaError(std::string(what) + " must satisfy 0 < lo <= hi");
    return r;
}

Placement parse_placement(const std::string& s) {
    if (s == "free") return Placement::Free;
    if (s == "on") return Placement::On;
    if (s == "beside") return Placement::Beside;
    if (s == "near") return Placement::Near;
    if (s == "front") return Placement::Front;
    throw FormatError("unknown placement '" + s + "'");
}

// Filled shape in a local h x w frame.
struct Mask {
    int h = 0;
    int w = 0;
    std::vector<char> cells;
    bool at(int r, int c) const { return cells[static_cast<std::size_t>(r) * w + c] != 0; }
    int count() const { return static_cast<int>(std::count(cells.begin(), cells.end(), 1)); }
};

Mask rasterize(ShapeKind kind, double area, double aspect) {
    double width = kind == ShapeKind::Rect ? std::sqrt(area / aspect) : std::sqrt(4.0 * area / (std::numbers::pi * aspect));
    Mask m;
    m.w = std::max(2, static_cast<int>(std::lround(width)));
    m.h = std::max(2, static_cast<int>(std::lround(width * aspect)));
    m.cells.assign(static_cast<std::size_t>(m.h) * m.w, 0);
    const double cr = (m.h - 1) / 2.0;
    const double cc = (m.w - 1) / 2.0;
    const double rr = m.h / 2.0;
    const double rc = m.w / 2.0;
    for (int r = 0; r < m.h; ++r) {
        for (int c = 0; c < m.w; ++c) {
            if (kind == ShapeKind::Rect) {
                m.cells[static_cast<std::size_t>(r) * m.w + c] = 1;
            } else {
                const double y = (r - cr) / rr;
                const double x = (c - cc) / rc;
                m.cells[static_cast<std::size_t>(r) * m.w + c] = (x * x + y * y <= 1.0) ? 1 : 0;
            }
        }
    }
    return m;
}

struct Placed {
    ClassId cls = 0;
    int pixels = 0;
    BBox bbox;
};

class Canvas {
public:
    Canvas(int h, int w) : h_(h), w_(w), owner_(static_cast<std::size_t>(h) * w, -1) {}

    int height() const { return h_; }
    int width() const { return w_; }
    int owner(int r, int c) const { return owner_[static_cast<std::size_t>(r) * w_ + c]; }
    const std::vector<Placed>& objects() const { return objects_; }

    // Cells must be free (or owned by `overwrite`); their 3x3 neighbourhoods
    // may only hold free cells, `touch` or `overwrite`.
    bool fits(const Mask& m, int r0, int c0, int touch, int overwrite) const {
        if (r0 < 0 || c0 < 0 || r0 + m.h > h_ || c0 + m.w > w_) return false;
        for (int r = 0; r < m.h; ++r) {
            for (int c = 0; c < m.w; ++c) {
                if (!m.at(r, c)) continue;
                const int gr = r0 + r;
                const int gc = c0 + c;
                const int own = owner(gr, gc);
                if (own != -1 && own != overwrite) return false;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = gr + dr;
                        const int nc = gc + dc;
                        if (nr < 0 || nc < 0 || nr >= h_ || nc >= w_) continue;
                        const int o = owner(nr, nc);
                        if (o != -1 && o != touch && o != overwrite) return false;
                    }
                }
            }
        }
        return true;
    }

    int place(const Mask& m, int r0, int c0, ClassId cls) {
        const int id = static_cast<int>(objects_.size());
        Placed p{cls, 0, {r0 + m.h, c0 + m.w, -1, -1}};
        for (int r = 0; r < m.h; ++r) {
            for (int c = 0; c < m.w; ++c) {
                if (!m.at(r, c)) continue;
                int& cell = owner_[static_cast<std::size_t>(r0 + r) * w_ + c0 + c];
                if (cell != -1) objects_[static_cast<std::size_t>(cell)].pixels -= 1;
                cell = id;
                ++p.pixels;
                p.bbox.min_row = std::min(p.bbox.min_row, r0 + r);
                p.bbox.min_col = std::min(p.bbox.min_col, c0 + c);
                p.bbox.max_row = std::max(p.bbox.max_row, r0 + r);
                p.bbox.max_col = std::max(p.bbox.max_col, c0 + c);
            }
        }
        objects_.push_back(p);
        return id;
    }

    std::vector<ClassId> cells() const {
        std::vector<ClassId> out(owner_.size(), 0);
        for (std::size_t i = 0; i < owner_.size(); ++i) {
            if (owner_[i] >= 0) out[i] = objects_[static_cast<std::size_t>(owner_[i])].cls;
        }
        return out;
    }

private:
    int h_;
    int w_;
    std::vector<int> owner_;
    std::vector<Placed> objects_;
};

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    if (hi < lo) return lo;
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, Range r) {
    if (r.hi <= r.lo) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

// Top-left corner that rests m directly on top of `anchor`, touching it.
std::optional<std::pair<int, int>> rest_on(const Canvas& canvas, const Mask& m, int anchor, int c0) {
    std::optional<int> best;
    for (int c = 0; c < m.w; ++c) {
        const int gc = c0 + c;
        if (gc < 0 || gc >= canvas.width()) continue;
        int bottom = -1;
        for (int r = m.h - 1; r >= 0; --r) {
            if (m.at(r, c)) {
                bottom = r;
                break;
            }
        }
        if (bottom < 0) continue;
        for (int gr = 0; gr < canvas.height(); ++gr) {
            if (canvas.owner(gr, gc) == anchor) {
                const int r0 = gr - bottom - 1;
                best = best ? std::min(*best, r0) : r0;
                break;
            }
        }
    }
    if (!best) return std::nullopt;
    return std::make_pair(*best, c0);
}

// Top-left corner that puts m flush against the left or right side of `anchor`.
std::optional<std::pair<int, int>> rest_beside(const Canvas& canvas, const Mask& m, int anchor, int r0, bool left) {
    std::optional<int> best;
    for (int r = 0; r < m.h; ++r) {
        const int gr = r0 + r;
        if (gr < 0 || gr >= canvas.height()) continue;
        int lo = -1;
        int hi = -1;
        for (int c = 0; c < m.w; ++c) {
            if (m.at(r, c)) {
                if (lo < 0) lo = c;
                hi = c;
            }
        }
        if (lo < 0) continue;
        int a_lo = -1;
        int a_hi = -1;
        for (int gc = 0; gc < canvas.width(); ++gc) {
            if (canvas.owner(gr, gc) == anchor) {
                if (a_lo < 0) a_lo = gc;
                a_hi = gc;
            }
        }
        if (a_lo < 0) continue;
        if (left) {
            const int c0 = a_lo - hi - 1;
            best = best ? std::min(*best, c0) : c0;
        } else {
            const int c0 = a_hi - lo + 1;
            best = best ? std::max(*best, c0) : c0;
        }
    }
    if (!best) return std::nullopt;
    return std::make_pair(r0, *best);
}

std::optional<int> place_member(Canvas& canvas, const MemberSpec& spec, ClassId cls, int anchor,
                                std::mt19937_64& rng) {
    const double aspect = uniform_real(rng, spec.aspect);
    double area = 0.0;
    if (spec.placement == Placement::Free) {
        area = uniform_real(rng, spec.area);
    } else {
        const double ratio = std::normal_distribution<double>(spec.size_log_mean, spec.size_log_std)(rng);
        area = canvas.objects()[static_cast<std::size_t>(anchor)].pixels * std::exp(ratio);
    }
    const Mask m = rasterize(spec.shape, area, aspect);
    if (m.count() < kMinObjectPixels) return std::nullopt;

    const int h = canvas.height();
    const int w = canvas.width();
    switch (spec.placement) {
        case Placement::Free: {
            const int r0 = uniform_int(rng, 1, h - m.h - 1);
            const int c0 = uniform_int(rng, 1, w - m.w - 1);
            if (!canvas.fits(m, r0, c0, -1, -1)) return std::nullopt;
            return canvas.place(m, r0, c0, cls);
        }
        case Placement::On: {
            const BBox& a = canvas.objects()[static_cast<std::size_t>(anchor)].bbox;
            const int c0 = uniform_int(rng, a.min_col - m.w / 3, a.max_col - 2 * m.w / 3);
            auto pos = rest_on(canvas, m, anchor, c0);
            if (!pos || !canvas.fits(m, pos->first, pos->second, anchor, -1)) return std::nullopt;
            return canvas.place(m, pos->first, pos->second, cls);
        }
        case Placement::Beside: {
            const BBox& a = canvas.objects()[static_cast<std::size_t>(anchor)].bbox;
            const int r0 = a.max_row - m.h + 1 + uniform_int(rng, -2, 0);
            auto pos = rest_beside(canvas, m, anchor, r0, std::bernoulli_distribution(0.5)(rng));
            if (!pos || !canvas.fits(m, pos->first, pos->second, anchor, -1)) return std::nullopt;
            return canvas.place(m, pos->first, pos->second, cls);
        }
        case Placement::Near: {
            const BBox& a = canvas.objects()[static_cast<std::size_t>(anchor)].bbox;
            const int gap = uniform_int(rng, 3, 10);
            int r0 = 0;
            int c0 = 0;
            switch (uniform_int(rng, 0, 3)) {
                case 0:  // left
                    c0 = a.min_col - gap - m.w;
                    r0 = uniform_int(rng, a.min_row - m.h / 2, a.max_row - m.h / 2);
                    break;
                case 1:  // right
                    c0 = a.max_col + gap + 1;
                    r0 = uniform_int(rng, a.min_row - m.h / 2, a.max_row - m.h / 2);
                    break;
                case 2:  // above
                    r0 = a.min_row - gap - m.h;
                    c0 = uniform_int(rng, a.min_col - m.w / 2, a.max_col - m.w / 2);
                    break;
                default:  // below
                    r0 = a.max_row + gap + 1;
                    c0 = uniform_int(rng, a.min_col - m.w / 2, a.max_col - m.w / 2);
                    break;
            }
            if (!canvas.fits(m, r0, c0, -1, -1)) return std::nullopt;
            return canvas.place(m, r0, c0, cls);
        }
        case Placement::Front: {
            const BBox& a = canvas.objects()[static_cast<std::size_t>(anchor)].bbox;
            const int r_lo = a.min_row + 2;
            const int r_hi = a.max_row - 2 - m.h + 1;
            const int c_lo = a.min_col + 2;
            const int c_hi = a.max_col - 2 - m.w + 1;
            if (r_hi < r_lo || c_hi < c_lo) return std::nullopt;
            const int r0 = uniform_int(rng, r_lo, r_hi);
            const int c0 = uniform_int(rng, c_lo, c_hi);
            if (!canvas.fits(m, r0, c0, anchor, anchor)) return std::nullopt;
            return canvas.place(m, r0, c0, cls);
        }
    }
    return std::nullopt;
}

ClassId class_id_of(const SyntheticConfig& config, const std::string& name) {
    for (const auto& [id, n] : config.classes) {
        if (n == name) return id;
    }
    throw SchemaError("class '" + name + "' not in class map");
}

std::vector<std::size_t> choose_groups(const ContextSpec& ctx, const SyntheticConfig& config, std::mt19937_64& rng) {
    const int k = uniform_int(rng, ctx.min_groups, ctx.max_groups);
    std::vector<std::size_t> chosen;
    std::set<ClassId> used;
    std::vector<double> weights;
    for (const auto& g : ctx.groups) weights.push_back(g.weight);
    for (int i = 0; i < k; ++i) {
        std::vector<double> w = weights;
        for (std::size_t g = 0; g < ctx.groups.size(); ++g) {
            for (const auto& m : ctx.groups[g].members) {
                if (used.contains(class_id_of(config, m.class_name))) w[g] = 0.0;
            }
        }
        if (std::all_of(w.begin(), w.end(), [](double x) { return x <= 0.0; })) break;
        const auto g = static_cast<std::size_t>(std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng));
        chosen.push_back(g);
        for (const auto& m : ctx.groups[g].members) used.insert(class_id_of(config, m.class_name));
    }
    return chosen;
}

}  // namespace

SyntheticConfig parse_synthetic_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("synthetic config: ") + e.what());
    }
    if (!doc.is_object()) throw FormatError("synthetic config must be a JSON object");
    if (doc.value("schema_version", kCorpusSchemaVersion) != kCorpusSchemaVersion) {
        throw VersionError("synthetic config: unsupported schema_version");
    }

    SyntheticConfig cfg;
    try {
        cfg.height = doc.value("height", cfg.height);
        cfg.width = doc.value("width", cfg.width);
        cfg.images_per_context = doc.value("images_per_context", cfg.images_per_context);
        cfg.val_fraction = doc.value("val_fraction", cfg.val_fraction);
        cfg.attribute_missing_rate = doc.value("attribute_missing_rate", cfg.attribute_missing_rate);
        cfg.context_attribute = doc.value("context_attribute", cfg.context_attribute);
    } catch (const json::type_error& e) {
        throw FormatError(std::string("synthetic config: ") + e.what());
    }
    if (cfg.height < 16 || cfg.width < 16) throw SchemaError("grid must be at least 16 x 16");
    if (cfg.images_per_context < 1) throw SchemaError("images_per_context must be positive");
    if (cfg.val_fraction < 0 || cfg.val_fraction >= 1) throw SchemaError("val_fraction must be in [0, 1)");
    if (cfg.attribute_missing_rate < 0 || cfg.attribute_missing_rate > 1) {
        throw SchemaError("attribute_missing_rate must be in [0, 1]");
    }

    if (!doc.contains("classes")) throw FormatError("synthetic config: missing classes");
    cfg.classes = parse_class_map(doc["classes"].dump());
    cfg.attributes = doc.contains("attributes") ? parse_attribute_schema(doc["attributes"].dump())
                                                : default_attribute_schema();
    if (!cfg.attributes.contains(cfg.context_attribute)) {
        throw SchemaError("context attribute '" + cfg.context_attribute + "' not in attribute schema");
    }
    const auto& allowed = cfg.attributes.at(cfg.context_attribute);

    if (!doc.contains("contexts") || !doc["contexts"].is_object() || doc["contexts"].empty()) {
        throw FormatError("synthetic config: contexts must be a non-empty object");
    }
    for (auto it = doc["contexts"].begin(); it != doc["contexts"].end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw SchemaError("context '" + it.key() + "' is not a value of '" + cfg.context_attribute + "'");
        }
        const json& jc = it.value();
        ContextSpec ctx;
        if (jc.contains("groups_per_image")) {
            const Range r = parse_range(jc["groups_per_image"], "groups_per_image");
            ctx.min_groups = static_cast<int>(r.lo);
            ctx.max_groups = static_cast<int>(r.hi);
        }
        if (!jc.contains("groups") || !jc["groups"].is_array() || jc["groups"].empty()) {
            throw SchemaError("context '" + it.key() + "' has an empty class pool");
        }
        for (const auto& jg : jc["groups"]) {
            GroupSpec group;
            group.weight = jg.value("weight", 1.0);
            if (!(group.weight > 0)) throw SchemaError("group weight must be positive");
            if (!jg.contains("members") || !jg["members"].is_array() || jg["members"].empty()) {
                throw SchemaError("group needs at least one member");
            }
            std::set<std::string> names;
            for (const auto& jm : jg["members"]) {
                MemberSpec m;
                m.class_name = jm.at("class").get<std::string>();
                class_id_of(cfg, m.class_name);
                if (!names.insert(m.class_name).second) throw SchemaError("class repeated within a group");
                const std::string shape = jm.value("shape", std::string("rect"));
                if (shape == "rect") {
                    m.shape = ShapeKind::Rect;
                } else if (shape == "ellipse") {
                    m.shape = ShapeKind::Ellipse;
                } else {
                    throw FormatError("unknown shape '" + shape + "'");
                }
                if (jm.contains("aspect")) m.aspect = parse_range(jm["aspect"], "aspect");
                if (jm.contains("area")) m.area = parse_range(jm["area"], "area");
                m.placement = parse_placement(jm.value("placement", std::string("free")));
                m.anchor = jm.value("anchor", 0);
                if (jm.contains("size_log_ratio")) {
                    const auto& s = jm["size_log_ratio"];
                    if (!s.is_array() || s.size() != 2) throw FormatError("size_log_ratio must be [mean, std]");
                    m.size_log_mean = s[0].get<double>();
                    m.size_log_std = s[1].get<double>();
                    if (m.size_log_std < 0) throw SchemaError("size_log_ratio std must be non-negative");
                }
                m.probability = jm.value("probability", 1.0);
                if (m.probability < 0 || m.probability > 1) throw SchemaError("probability must be in [0, 1]");
                const int index = static_cast<int>(group.members.size());
                if (index == 0 && m.placement != Placement::Free) {
                    throw SchemaError("the first group member must be placed freely");
                }
                if (index > 0 && (m.placement == Placement::Free || m.anchor < 0 || m.anchor >= index)) {
                    throw SchemaError("group members after the first need a placement relative to an earlier member");
                }
                group.members.push_back(m);
            }
            ctx.groups.push_back(std::move(group));
        }
        if (ctx.min_groups < 1 || ctx.max_groups < ctx.min_groups) {
            throw SchemaError("groups_per_image must satisfy 1 <= lo <= hi");
        }
        cfg.contexts[it.key()] = std::move(ctx);
    }
    return cfg;
}

SyntheticConfig default_synthetic_config() { return parse_synthetic_config(kDefaultConfigJson); }

std::vector<ClassId> context_pool(const SyntheticConfig& config, const std::string& context) {
    auto it = config.contexts.find(context);
    if (it == config.contexts.end()) throw SchemaError("unknown context '" + context + "'");
    std::set<ClassId> pool;
    for (const auto& g : it->second.groups) {
        for (const auto& m : g.members) pool.insert(class_id_of(config, m.class_name));
    }
    return {pool.begin(), pool.end()};
}

LabelGrid synth_scene(const SyntheticConfig& config, const std::string& context, std::uint64_t seed,
                      std::string image_id) {
    auto cit = config.contexts.find(context);
    if (cit == config.contexts.end()) throw SchemaError("unknown context '" + context + "'");
    const ContextSpec& ctx = cit->second;
    std::mt19937_64 rng(seed);

    for (int scene_try = 0; scene_try < kSceneAttempts; ++scene_try) {
        Canvas canvas(config.height, config.width);
        bool ok = true;
        for (std::size_t g : choose_groups(ctx, config, rng)) {
            const GroupSpec& group = ctx.groups[g];
            std::vector<bool> include(group.members.size(), true);
            for (std::size_t i = 1; i < group.members.size(); ++i) {
                include[i] = std::bernoulli_distribution(group.members[i].probability)(rng) &&
                             include[static_cast<std::size_t>(group.members[i].anchor)];
            }
            bool placed = false;
            for (int attempt = 0; attempt < kGroupAttempts && !placed; ++attempt) {
                Canvas trial = canvas;
                std::vector<int> ids(group.members.size(), -1);
                placed = true;
                for (std::size_t i = 0; i < group.members.size() && placed; ++i) {
                    if (!include[i]) continue;
                    const MemberSpec& m = group.members[i];
                    const int anchor = i == 0 ? -1 : ids[static_cast<std::size_t>(m.anchor)];
                    auto id = place_member(trial, m, class_id_of(config, m.class_name), anchor, rng);
                    if (!id) {
                        placed = false;
                    } else {
                        ids[i] = *id;
                    }
                }
                if (placed) canvas = std::move(trial);
            }
            if (!placed) {
                ok = false;
                break;
            }
        }
        if (ok) return LabelGrid(std::move(image_id), config.height, config.width, canvas.cells(), config.classes);
    }
    throw PlacementError("could not place the groups of a '" + context + "' scene after " +
                         std::to_string(kSceneAttempts) + " attempts");
}

Corpus synth_corpus(const SyntheticConfig& config, const std::string& out_dir, std::uint64_t seed) {
    namespace fs = std::filesystem;
    const fs::path root(out_dir);
    fs::create_directories(root / "images");

    AttributeTable table(config.attributes);
    nlohmann::ordered_json train = nlohmann::ordered_json::array();
    nlohmann::ordered_json val = nlohmann::ordered_json::array();

    std::uint64_t index = 0;
    for (const auto& [context, _] : config.contexts) {
        for (int i = 0; i < config.images_per_context; ++i, ++index) {
            char id_buf[32];
            std::snprintf(id_buf, sizeof id_buf, "img_%06llu", static_cast<unsigned long long>(index));
            const std::string id(id_buf);
            const std::uint64_t image_seed = derive_seed(seed, index);
            const LabelGrid grid = synth_scene(config, context, image_seed, id);
            write_text_file(fs::path(root / "images" / (id + ".lgrid")).string(), format_label_grid(grid));

            std::mt19937_64 rng(derive_seed(image_seed, 1));
            AttributeRecord rec;
            for (const auto& [name, values] : config.attributes) {
                if (name == config.context_attribute) {
                    rec[name] = context;
                    continue;
                }
                if (std::bernoulli_distribution(config.attribute_missing_rate)(rng)) continue;
                rec[name] = values[std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng)];
            }
            table.add(id, rec);
            (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.val_fraction ? val : train).push_back(id);
        }
    }

    write_text_file((root / "classes.json").string(), class_map_to_json(config.classes));
    write_text_file((root / "attributes.json").string(), attributes_to_json(table));
    nlohmann::ordered_json splits;
    splits["schema_version"] = kCorpusSchemaVersion;
    splits["train"] = train;
    splits["val"] = val;
    write_text_file((root / "splits.json").string(), splits.dump(2) + "\n");
    return load_corpus(out_dir);
}

}  // namespace ctxverify
