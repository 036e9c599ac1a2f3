#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctxverify {

using ClassId = int;
using ClassMap = std::map<ClassId, std::string>;

inline constexpr int kDefaultMinArea = 25;

struct PixelCoord {
    int row = 0;
    int col = 0;
    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct Point {
    double row = 0.0;
    double col = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct BBox {
    int min_row = 0;
    int min_col = 0;
    int max_row = 0;
    int max_col = 0;
    friend bool operator==(const BBox&, const BBox&) = default;
};

// A row-major grid of class ids; 0 is background. Validated on construction
// and immutable afterwards.
class LabelGrid {
public:
    LabelGrid(std::string image_id, int height, int width, std::vector<ClassId> cells, ClassMap class_map);

    const std::string& image_id() const { return image_id_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return cells_.size(); }
    std::span<const ClassId> cells() const { return cells_; }
    const ClassMap& class_map() const { return class_map_; }

    ClassId at(int row, int col) const { return cells_[static_cast<std::size_t>(row) * width_ + col]; }
    bool contains(int row, int col) const { return row >= 0 && col >= 0 && row < height_ && col < width_; }
    int index(int row, int col) const { return row * width_ + col; }

    // Copy with the listed linear indices set to background.
    LabelGrid with_cleared(std::span<const int> linear_indices) const;
    LabelGrid with_image_id(std::string id) const;

    friend bool operator==(const LabelGrid&, const LabelGrid&) = default;

private:
    std::string image_id_;
    int height_;
    int width_;
    std::vector<ClassId> cells_;
    ClassMap class_map_;
};

// One 8-connected same-class component.
struct SceneObject {
    int object_id = 0;
    ClassId class_id = 0;
    int pixel_count = 0;
    Point centroid;
    BBox bbox;
    std::vector<PixelCoord> boundary;  // closed Moore cycle, clockwise
    std::vector<int> pixels;           // sorted linear indices
};

// Parses the `.lgrid` text format: "height width" then `height` rows of
// `width` whitespace-separated ids.
LabelGrid parse_label_grid(std::string_view text, const ClassMap& class_map, std::string image_id = {});
std::string format_label_grid(const LabelGrid& grid);

LabelGrid load_label_grid(const std::string& path, const ClassMap& class_map);
void save_label_grid(const std::string& path, const LabelGrid& grid);

// Accepts either {"1": "cat", ...} or {"schema_version": 1, "classes": {...}}.
ClassMap parse_class_map(std::string_view json_text);
std::string class_map_to_json(const ClassMap& class_map);

// Components are ordered (and numbered) by the raster position of their first pixel.
std::vector<SceneObject> extract_objects(const LabelGrid& grid, int min_area = kDefaultMinArea);

// Moore-neighbour trace of the outer boundary, clockwise from the
// top-left-most pixel. Returns a single element for isolated pixels.
std::vector<PixelCoord> trace_boundary(const LabelGrid& grid, const SceneObject& object);

}  // namespace ctxverify
