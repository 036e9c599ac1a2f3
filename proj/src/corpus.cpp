#include "ctxverify/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxverify/error.hpp"

namespace ctxverify {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

Contradiction generate_contradiction(const LabelGrid& grid, std::uint64_t seed, int min_area) {
    const auto objects = extract_objects(grid, min_area);
    if (objects.size() < 2) {
        throw NotEnoughObjectsError("image '" + grid.image_id() + "' has " + std::to_string(objects.size()) +
                                    " objects; at least 2 are needed");
    }
    std::mt19937_64 rng(seed);
    const auto pick = static_cast<std::size_t>(rng() % objects.size());
    const SceneObject& victim = objects[pick];
    return Contradiction{grid.with_cleared(victim.pixels), victim.class_id, victim.object_id, victim.pixel_count};
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out << text;
}

std::vector<std::string> Corpus::all_ids() const {
    std::vector<std::string> ids = train;
    ids.insert(ids.end(), val.begin(), val.end());
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::string Corpus::image_path(const std::string& id) const { return (fs::path(root) / "images" / (id + ".lgrid")).string(); }

LabelGrid Corpus::load_scene(const std::string& id) const {
    return parse_label_grid(read_text_file(image_path(id)), class_map, id);
}

std::vector<LabelGrid> Corpus::load_split(Split split) const {
    std::vector<LabelGrid> out;
    for (const auto& id : split == Split::Train ? train : val) out.push_back(load_scene(id));
    return out;
}

namespace {

json load_versioned(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path.string()));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("schema_version")) {
        throw FormatError(path.string() + ": missing schema_version");
    }
    if (doc["schema_version"] != kCorpusSchemaVersion) {
        throw VersionError(path.string() + ": unsupported schema_version " + doc["schema_version"].dump());
    }
    return doc;
}

std::vector<std::string> string_list(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc[key].is_array()) throw FormatError(std::string("splits: missing array '") + key + "'");
    std::vector<std::string> out;
    for (const auto& v : doc[key]) {
        if (!v.is_string()) throw FormatError("splits: ids must be strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

Corpus load_corpus(const std::string& root) {
    const fs::path base(root);
    Corpus corpus;
    corpus.root = root;

    load_versioned(base / "classes.json");
    corpus.class_map = parse_class_map(read_text_file((base / "classes.json").string()));

    const json splits = load_versioned(base / "splits.json");
    corpus.train = string_list(splits, "train");
    corpus.val = string_list(splits, "val");
    std::set<std::string> seen;
    for (const auto& id : corpus.all_ids()) {
        if (!seen.insert(id).second) throw DuplicateError("image '" + id + "' appears in more than one split");
        if (!fs::exists(corpus.image_path(id))) throw FormatError("missing image file for '" + id + "'");
    }

    const json attrs = load_versioned(base / "attributes.json");
    if (!attrs.contains("schema")) throw FormatError("attributes.json: missing schema");
    const AttributeSchema schema = parse_attribute_schema(attrs["schema"].dump());
    corpus.attributes = load_attributes(attrs.dump(), schema);
    for (const auto& id : corpus.all_ids()) {
        if (!corpus.attributes.record(id)) corpus.attributes.add(id, {});
    }
    return corpus;
}

}  // namespace ctxverify
