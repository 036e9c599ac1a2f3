#pragma once

// Seeded generators and brute-force oracles shared by the unit tests and the
// acceptance binary. Nothing here calls the code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "ctxverify/label_grid.hpp"
#include "ctxverify/relations.hpp"

namespace testsupport {

using ctxverify::ClassId;
using ctxverify::ClassMap;
using ctxverify::LabelGrid;

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }
};

inline ClassMap numbered_classes(int n) {
    ClassMap m;
    for (int i = 1; i <= n; ++i) m[i] = "class" + std::to_string(i);
    return m;
}

inline LabelGrid make_grid(int h, int w, std::vector<ClassId> cells, int n_classes, std::string id = "g") {
    return LabelGrid(std::move(id), h, w, std::move(cells), numbered_classes(n_classes));
}

// Independent noise per pixel: background with probability p_background.
inline LabelGrid random_grid(Rng& rng, int h, int w, int n_classes, double p_background) {
    std::vector<ClassId> cells(static_cast<std::size_t>(h) * w);
    for (auto& c : cells) c = rng.chance(p_background) ? 0 : rng.uniform_int(1, n_classes);
    return make_grid(h, w, std::move(cells), n_classes);
}

using PixelSet = std::set<std::pair<int, int>>;

// 4-connected random growth from a seed pixel, confined to [r0, r0+h) x [c0, c0+w).
inline PixelSet random_blob(Rng& rng, int r0, int c0, int h, int w, int target) {
    PixelSet blob;
    std::vector<std::pair<int, int>> frontier{{r0 + rng.uniform_int(0, h - 1), c0 + rng.uniform_int(0, w - 1)}};
    blob.insert(frontier.front());
    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, -1, 1};
    while (static_cast<int>(blob.size()) < target) {
        const auto [r, c] = frontier[rng.uniform_int(0, static_cast<int>(frontier.size()) - 1)];
        const int k = rng.uniform_int(0, 3);
        const int nr = r + dr[k], nc = c + dc[k];
        if (nr < r0 || nc < c0 || nr >= r0 + h || nc >= c0 + w) continue;
        if (blob.insert({nr, nc}).second) frontier.push_back({nr, nc});
    }
    return blob;
}

// Fills enclosed background so the blob has no holes (outer boundary == all boundary).
inline PixelSet fill_holes(const PixelSet& blob, int h, int w) {
    std::vector<char> outside(static_cast<std::size_t>(h + 2) * (w + 2), 0);
    auto idx = [&](int r, int c) { return static_cast<std::size_t>(r + 1) * (w + 2) + (c + 1); };
    std::deque<std::pair<int, int>> q{{-1, -1}};
    outside[idx(-1, -1)] = 1;
    while (!q.empty()) {
        const auto [r, c] = q.front();
        q.pop_front();
        const int dr[4] = {-1, 1, 0, 0};
        const int dc[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            const int nr = r + dr[k], nc = c + dc[k];
            if (nr < -1 || nc < -1 || nr > h || nc > w) continue;
            if (outside[idx(nr, nc)] || blob.contains({nr, nc})) continue;
            outside[idx(nr, nc)] = 1;
            q.push_back({nr, nc});
        }
    }
    PixelSet filled;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!outside[idx(r, c)]) filled.insert({r, c});
        }
    }
    return filled;
}

inline LabelGrid paint(int h, int w, const std::vector<std::pair<PixelSet, ClassId>>& layers, int n_classes,
                       std::string id = "g") {
    std::vector<ClassId> cells(static_cast<std::size_t>(h) * w, 0);
    for (const auto& [pixels, cls] : layers) {
        for (const auto& [r, c] : pixels) cells[static_cast<std::size_t>(r) * w + c] = cls;
    }
    return make_grid(h, w, std::move(cells), n_classes, std::move(id));
}

// Octant by atan2 sector lookup, 0 = E counter-clockwise with "up" = -row.
inline int octant_oracle(double ar, double ac, double br, double bc) {
    const double deg = std::atan2(-(br - ar), bc - ac) * 180.0 / std::numbers::pi;
    const double shifted = std::fmod(deg + 22.5 + 720.0, 360.0);
    return static_cast<int>(std::floor(shifted / 45.0)) % 8;
}

inline bool contact_oracle(const PixelSet& a, const PixelSet& b) {
    for (const auto& [ar, ac] : a) {
        for (const auto& [br, bc] : b) {
            if (std::abs(ar - br) <= 1 && std::abs(ac - bc) <= 1) return true;
        }
    }
    return false;
}

struct OracleComponent {
    ClassId cls = 0;
    std::vector<int> pixels;  // sorted linear indices
};

// 8-connected same-class components by BFS, ordered by first raster pixel.
inline std::vector<OracleComponent> flood_fill_oracle(const LabelGrid& g, int min_area) {
    const int h = g.height(), w = g.width();
    std::vector<char> seen(static_cast<std::size_t>(h) * w, 0);
    std::vector<OracleComponent> out;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const ClassId cls = g.at(r, c);
            if (cls == 0 || seen[static_cast<std::size_t>(r) * w + c]) continue;
            OracleComponent comp{cls, {}};
            std::deque<std::pair<int, int>> q{{r, c}};
            seen[static_cast<std::size_t>(r) * w + c] = 1;
            while (!q.empty()) {
                const auto [cr, cc] = q.front();
                q.pop_front();
                comp.pixels.push_back(cr * w + cc);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = cr + dr, nc = cc + dc;
                        if (nr < 0 || nc < 0 || nr >= h || nc >= w) continue;
                        auto& s = seen[static_cast<std::size_t>(nr) * w + nc];
                        if (s || g.at(nr, nc) != cls) continue;
                        s = 1;
                        q.push_back({nr, nc});
                    }
                }
            }
            std::sort(comp.pixels.begin(), comp.pixels.end());
            if (static_cast<int>(comp.pixels.size()) >= min_area) out.push_back(std::move(comp));
        }
    }
    return out;
}

// Pixels of the component with a 4-neighbour outside it or off the grid.
inline PixelSet boundary_oracle(const PixelSet& comp, int h, int w) {
    PixelSet out;
    for (const auto& [r, c] : comp) {
        const std::pair<int, int> nb[4] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (const auto& [nr, nc] : nb) {
            if (nr < 0 || nc < 0 || nr >= h || nc >= w || !comp.contains({nr, nc})) {
                out.insert({r, c});
                break;
            }
        }
    }
    return out;
}

// Plug-in mutual information by explicit double sum over a row-major table.
inline double mi_oracle(const std::vector<double>& t, int rows, int cols) {
    double total = 0.0;
    for (double v : t) total += v;
    std::vector<double> pr(rows, 0.0), pc(cols, 0.0);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            pr[i] += t[i * cols + j] / total;
            pc[j] += t[i * cols + j] / total;
        }
    }
    double mi = 0.0;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double p = t[i * cols + j] / total;
            if (p > 0) mi += p * std::log(p / (pr[i] * pc[j]));
        }
    }
    return mi;
}

inline double entropy_oracle(const std::vector<double>& counts) {
    double total = 0.0;
    for (double v : counts) total += v;
    double h = 0.0;
    for (double v : counts) {
        if (v > 0) h -= v / total * std::log(v / total);
    }
    return h;
}

// Digital disk of the given radius centred at (cr, cc).
inline PixelSet disk(double cr, double cc, double radius) {
    PixelSet out;
    for (int r = static_cast<int>(std::floor(cr - radius)); r <= static_cast<int>(std::ceil(cr + radius)); ++r) {
        for (int c = static_cast<int>(std::floor(cc - radius)); c <= static_cast<int>(std::ceil(cc + radius)); ++c) {
            if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius) out.insert({r, c});
        }
    }
    return out;
}

inline PixelSet rect(int r0, int c0, int h, int w) {
    PixelSet out;
    for (int r = r0; r < r0 + h; ++r) {
        for (int c = c0; c < c0 + w; ++c) out.insert({r, c});
    }
    return out;
}

inline PixelSet translate(const PixelSet& s, int dr, int dc) {
    PixelSet out;
    for (const auto& [r, c] : s) out.insert({r + dr, c + dc});
    return out;
}

inline PixelSet upscale2(const PixelSet& s) {
    PixelSet out;
    for (const auto& [r, c] : s) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) out.insert({2 * r + i, 2 * c + j});
        }
    }
    return out;
}

// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("ctxverify_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// relative path -> file bytes
inline std::map<std::string, std::string> snapshot_tree(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
}

}  // namespace testsupport
