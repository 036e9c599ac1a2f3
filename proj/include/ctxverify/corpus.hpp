#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctxverify/context.hpp"
#include "ctxverify/label_grid.hpp"

namespace ctxverify {

// splitmix64 finaliser over (seed, stream); used for per-image seeds so that
// parallel and sequential generation agree.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t hash_string(std::string_view s);

struct Contradiction {
    LabelGrid grid;
    ClassId removed_class = 0;
    int removed_object = 0;
    int removed_pixels = 0;
};

// Clears one uniformly chosen object. Throws NotEnoughObjectsError below two objects.
Contradiction generate_contradiction(const LabelGrid& grid, std::uint64_t seed, int min_area = kDefaultMinArea);

enum class Split { Train, Val };

// On-disk layout: classes.json, attributes.json, splits.json, images/<id>.lgrid.
struct Corpus {
    std::string root;
    ClassMap class_map;
    std::vector<std::string> train;
    std::vector<std::string> val;
    AttributeTable attributes{AttributeSchema{}};

    std::vector<std::string> all_ids() const;
    std::string image_path(const std::string& id) const;
    LabelGrid load_scene(const std::string& id) const;
    std::vector<LabelGrid> load_split(Split split) const;
};

// Throws FormatError / SchemaError / VersionError on malformed corpora.
Corpus load_corpus(const std::string& root);

inline constexpr int kCorpusSchemaVersion = 1;

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace ctxverify
