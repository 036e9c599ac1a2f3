#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctxverify/context.hpp"
#include "ctxverify/corpus.hpp"

namespace ctxverify {

enum class ShapeKind { Rect, Ellipse };

// How a group member is placed relative to its anchor member.
enum class Placement { Free, On, Beside, Near, Front };

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct MemberSpec {
    std::string class_name;
    ShapeKind shape = ShapeKind::Rect;
    Range aspect{0.5, 1.0};  // height / width
    Range area{400, 800};    // pixels, anchors only
    Placement placement = Placement::Free;
    int anchor = 0;                 // index of the member this one is placed against
    double size_log_mean = 0.0;     // ln(area / anchor area)
    double size_log_std = 0.2;
    double probability = 1.0;
};

struct GroupSpec {
    double weight = 1.0;
    std::vector<MemberSpec> members;  // members[0] is the free anchor
};

struct ContextSpec {
    int min_groups = 1;
    int max_groups = 1;
    std::vector<GroupSpec> groups;
};

struct SyntheticConfig {
    int height = 96;
    int width = 128;
    int images_per_context = 100;
    double val_fraction = 0.25;
    double attribute_missing_rate = 0.0;
    std::string context_attribute = "location";
    ClassMap classes;
    AttributeSchema attributes;
    std::map<std::string, ContextSpec> contexts;
};

// Validates pools, anchors and class names; throws SchemaError / FormatError.
SyntheticConfig parse_synthetic_config(std::string_view json_text);

// The world used by the tests and the acceptance experiment: two contexts
// with exclusive class pools built from support groups.
SyntheticConfig default_synthetic_config();

// Classes a context can ever draw.
std::vector<ClassId> context_pool(const SyntheticConfig& config, const std::string& context);

// One scene of the given context. Throws PlacementError after bounded retries.
LabelGrid synth_scene(const SyntheticConfig& config, const std::string& context, std::uint64_t seed,
                      std::string image_id = {});

// Writes a complete corpus under out_dir and returns it loaded.
Corpus synth_corpus(const SyntheticConfig& config, const std::string& out_dir, std::uint64_t seed);

}  // namespace ctxverify
