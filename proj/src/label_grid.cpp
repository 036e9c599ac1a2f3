#include "ctxverify/label_grid.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxverify/error.hpp"

namespace ctxverify {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_tokens(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) tokens.push_back(line.substr(i, j - i));
        i = j;
    }
    return tokens;
}

int parse_nonneg_int(std::string_view token, int line_no) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || value < 0) {
        throw FormatError("line " + std::to_string(line_no) + ": expected non-negative integer, got '" +
                          std::string(token) + "'");
    }
    return value;
}

// Moore neighbourhood, clockwise on screen (row grows downward), starting west.
constexpr std::array<PixelCoord, 8> kMoore = {{{0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}}};

int moore_index(int dr, int dc) {
    for (int i = 0; i < 8; ++i) {
        if (kMoore[i].row == dr && kMoore[i].col == dc) return i;
    }
    return -1;
}

}  // namespace

LabelGrid::LabelGrid(std::string image_id, int height, int width, std::vector<ClassId> cells, ClassMap class_map)
    : image_id_(std::move(image_id)), height_(height), width_(width), cells_(std::move(cells)),
      class_map_(std::move(class_map)) {
    if (height_ < 1 || width_ < 1) throw FormatError("grid dimensions must be positive");
    if (cells_.size() != static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_)) {
        throw FormatError("cell count does not match height x width");
    }
    for (ClassId id : cells_) {
        if (id < 0) throw FormatError("negative class id");
        if (id != 0 && !class_map_.contains(id)) {
            throw UnknownClassError("class id " + std::to_string(id) + " not in class map");
        }
    }
}

LabelGrid LabelGrid::with_cleared(std::span<const int> linear_indices) const {
    std::vector<ClassId> cells = cells_;
    for (int idx : linear_indices) cells.at(static_cast<std::size_t>(idx)) = 0;
    return LabelGrid(image_id_, height_, width_, std::move(cells), class_map_);
}

LabelGrid LabelGrid::with_image_id(std::string id) const {
    return LabelGrid(std::move(id), height_, width_, cells_, class_map_);
}

LabelGrid parse_label_grid(std::string_view text, const ClassMap& class_map, std::string image_id) {
    auto lines = split_lines(text);
    std::size_t cursor = 0;
    while (cursor < lines.size() && split_tokens(lines[cursor]).empty()) ++cursor;
    if (cursor == lines.size()) throw FormatError("empty label grid");

    auto header = split_tokens(lines[cursor]);
    if (header.size() != 2) throw FormatError("header must be 'height width'");
    const int height = parse_nonneg_int(header[0], static_cast<int>(cursor) + 1);
    const int width = parse_nonneg_int(header[1], static_cast<int>(cursor) + 1);
    if (height < 1 || width < 1) throw FormatError("grid dimensions must be positive");
    ++cursor;

    std::vector<ClassId> cells;
    cells.reserve(static_cast<std::size_t>(height) * width);
    for (int r = 0; r < height; ++r, ++cursor) {
        if (cursor >= lines.size()) throw FormatError("expected " + std::to_string(height) + " rows");
        auto tokens = split_tokens(lines[cursor]);
        if (static_cast<int>(tokens.size()) != width) {
            throw FormatError("row " + std::to_string(r) + " has " + std::to_string(tokens.size()) +
                              " values, expected " + std::to_string(width));
        }
        for (auto tok : tokens) cells.push_back(parse_nonneg_int(tok, static_cast<int>(cursor) + 1));
    }
    for (; cursor < lines.size(); ++cursor) {
        if (!split_tokens(lines[cursor]).empty()) throw FormatError("trailing data after last row");
    }
    return LabelGrid(std::move(image_id), height, width, std::move(cells), class_map);
}

std::string format_label_grid(const LabelGrid& grid) {
    std::string out = std::to_string(grid.height()) + " " + std::to_string(grid.width()) + "\n";
    for (int r = 0; r < grid.height(); ++r) {
        for (int c = 0; c < grid.width(); ++c) {
            if (c) out += ' ';
            out += std::to_string(grid.at(r, c));
        }
        out += '\n';
    }
    return out;
}

LabelGrid load_label_grid(const std::string& path, const ClassMap& class_map) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string stem = path;
    if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
    if (auto dot = stem.rfind('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    return parse_label_grid(ss.str(), class_map, stem);
}

void save_label_grid(const std::string& path, const LabelGrid& grid) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    out << format_label_grid(grid);
}

ClassMap parse_class_map(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("class map: ") + e.what());
    }
    const nlohmann::json* classes = &doc;
    if (doc.is_object() && doc.contains("classes")) classes = &doc["classes"];
    if (!classes->is_object()) throw FormatError("class map must be a JSON object");

    ClassMap out;
    for (auto it = classes->begin(); it != classes->end(); ++it) {
        if (it.key() == "schema_version") continue;
        int id = parse_nonneg_int(it.key(), 0);
        if (id == 0) throw FormatError("class id 0 is reserved for background");
        if (!it.value().is_string()) throw FormatError("class name must be a string");
        out[id] = it.value().get<std::string>();
    }
    return out;
}

std::string class_map_to_json(const ClassMap& class_map) {
    nlohmann::ordered_json classes = nlohmann::ordered_json::object();
    for (const auto& [id, name] : class_map) classes[std::to_string(id)] = name;
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    doc["classes"] = classes;
    return doc.dump(2) + "\n";
}

std::vector<SceneObject> extract_objects(const LabelGrid& grid, int min_area) {
    const int h = grid.height();
    const int w = grid.width();
    std::vector<char> visited(grid.size(), 0);
    std::vector<SceneObject> objects;
    std::vector<int> stack;

    for (int start = 0; start < static_cast<int>(grid.size()); ++start) {
        const ClassId cls = grid.cells()[start];
        if (cls == 0 || visited[start]) continue;

        std::vector<int> pixels;
        visited[start] = 1;
        stack.assign(1, start);
        while (!stack.empty()) {
            const int idx = stack.back();
            stack.pop_back();
            pixels.push_back(idx);
            const int r = idx / w;
            const int c = idx % w;
            for (const auto& d : kMoore) {
                const int nr = r + d.row;
                const int nc = c + d.col;
                if (!grid.contains(nr, nc)) continue;
                const int nidx = nr * w + nc;
                if (!visited[nidx] && grid.cells()[nidx] == cls) {
                    visited[nidx] = 1;
                    stack.push_back(nidx);
                }
            }
        }
        if (static_cast<int>(pixels.size()) < min_area) continue;

        std::sort(pixels.begin(), pixels.end());
        SceneObject obj;
        obj.object_id = static_cast<int>(objects.size());
        obj.class_id = cls;
        obj.pixel_count = static_cast<int>(pixels.size());
        obj.bbox = {h, w, -1, -1};
        long long sum_r = 0;
        long long sum_c = 0;
        for (int idx : pixels) {
            const int r = idx / w;
            const int c = idx % w;
            sum_r += r;
            sum_c += c;
            obj.bbox.min_row = std::min(obj.bbox.min_row, r);
            obj.bbox.min_col = std::min(obj.bbox.min_col, c);
            obj.bbox.max_row = std::max(obj.bbox.max_row, r);
            obj.bbox.max_col = std::max(obj.bbox.max_col, c);
        }
        obj.centroid = {static_cast<double>(sum_r) / obj.pixel_count, static_cast<double>(sum_c) / obj.pixel_count};
        obj.pixels = std::move(pixels);
        obj.boundary = trace_boundary(grid, obj);
        objects.push_back(std::move(obj));
    }
    return objects;
}

std::vector<PixelCoord> trace_boundary(const LabelGrid& grid, const SceneObject& object) {
    if (object.pixels.empty()) return {};
    const int w = grid.width();
    const BBox& bb = object.bbox;
    // Membership mask over the bbox padded by one cell on each side.
    const int mh = bb.max_row - bb.min_row + 3;
    const int mw = bb.max_col - bb.min_col + 3;
    std::vector<char> mask(static_cast<std::size_t>(mh) * mw, 0);
    for (int idx : object.pixels) {
        const int r = idx / w - bb.min_row + 1;
        const int c = idx % w - bb.min_col + 1;
        mask[static_cast<std::size_t>(r) * mw + c] = 1;
    }
    auto member = [&](PixelCoord p) { return mask[static_cast<std::size_t>(p.row) * mw + p.col] != 0; };

    // Scans clockwise from the backtrack direction; returns the next member
    // pixel and the backtrack direction relative to it.
    struct Move {
        PixelCoord next;
        int backtrack;
    };
    auto scan = [&](PixelCoord cur, int back) -> std::optional<Move> {
        for (int i = 1; i <= 8; ++i) {
            const int dir = (back + i) % 8;
            const PixelCoord q{cur.row + kMoore[dir].row, cur.col + kMoore[dir].col};
            if (member(q)) {
                const int prev = (back + i - 1) % 8;
                const int dr = cur.row + kMoore[prev].row - q.row;
                const int dc = cur.col + kMoore[prev].col - q.col;
                return Move{q, moore_index(dr, dc)};
            }
        }
        return std::nullopt;
    };

    const int first_idx = object.pixels.front();
    const PixelCoord start{first_idx / w - bb.min_row + 1, first_idx % w - bb.min_col + 1};
    auto to_grid = [&](PixelCoord p) { return PixelCoord{p.row + bb.min_row - 1, p.col + bb.min_col - 1}; };

    std::vector<PixelCoord> out{to_grid(start)};
    auto first = scan(start, 0);
    if (!first) return out;

    PixelCoord cur = first->next;
    int back = first->backtrack;
    while (true) {
        if (cur == start) {
            auto m = scan(cur, back);
            if (m->next == first->next) break;
            out.push_back(to_grid(cur));
            cur = m->next;
            back = m->backtrack;
            continue;
        }
        out.push_back(to_grid(cur));
        auto m = scan(cur, back);
        cur = m->next;
        back = m->backtrack;
    }
    return out;
}

}  // namespace ctxverify
