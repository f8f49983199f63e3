#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace iiclab {

struct Vertex {
    int x = 0;
    int y = 0;

    friend bool operator==(Vertex a, Vertex b) { return a.x == b.x && a.y == b.y; }
    friend bool operator!=(Vertex a, Vertex b) { return !(a == b); }
    // lexicographic by (y, x): matches the row-major grid scan order
    friend bool operator<(Vertex a, Vertex b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }
};

inline int l1_dist(Vertex a, Vertex b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

inline std::int64_t euclid_sq(Vertex a, Vertex b) {
    std::int64_t dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// Axis directions for the two edge slots owned by each vertex.
enum class Dir : std::uint8_t { East = 0, North = 1 };

// The box S(n) = [-n, n]^2 (optionally translated by `offset`), with a fixed
// vertex and edge enumeration. All reproducibility guarantees hinge on this
// order, so it is frozen here:
//   vertices: row-major, y from -n up, x from -n up within a row
//   edges:    per vertex in that order, east edge first (if x < n), then
//             north edge (if y < n); indices are dense over existing edges
// Edge indices are independent of `offset` (they live in box-local coords).
struct BoxRegion {
    int n = 0;            // half-width, box side is 2n+1 vertices
    Vertex offset{0, 0};  // translation applied to box-local coordinates

    explicit BoxRegion(int half_width = 0, Vertex off = {0, 0}) : n(half_width), offset(off) {
        if (n < 0) throw std::invalid_argument("BoxRegion: negative half-width");
    }

    int side() const { return 2 * n + 1; }
    std::int64_t vertex_count() const { return std::int64_t(side()) * side(); }
    std::int64_t edge_count() const { return std::int64_t(4) * n * (2 * n + 1); }

    bool contains(Vertex v) const {
        return std::abs(v.x - offset.x) <= n && std::abs(v.y - offset.y) <= n;
    }
    bool on_boundary(Vertex v) const {
        if (!contains(v)) return false;
        return std::abs(v.x - offset.x) == n || std::abs(v.y - offset.y) == n;
    }

    std::int64_t vertex_index(Vertex v) const {
        return std::int64_t(v.y - offset.y + n) * side() + (v.x - offset.x + n);
    }
    Vertex vertex_at(std::int64_t idx) const {
        int lx = int(idx % side()), ly = int(idx / side());
        return Vertex{lx - n + offset.x, ly - n + offset.y};
    }

    // Dense edge index of the east/north edge owned by v. Caller must ensure
    // the edge exists (x < n for east, y < n for north).
    // Rows below the top contribute 4n+1 edges (2n east + 2n+1 north); the top
    // row contributes its 2n east edges only.
    std::int64_t edge_index(Vertex v, Dir d) const {
        int lx = v.x - offset.x + n;  // 0..2n
        int ly = v.y - offset.y + n;
        std::int64_t row_base = std::int64_t(ly) * (4 * n + 1);
        if (ly == 2 * n) {
            // top row: east edges only
            return row_base + lx;
        }
        std::int64_t east = row_base + 2 * lx;
        return d == Dir::East ? east : east + 1 - (lx == 2 * n ? 1 : 0);
    }

    bool edge_exists(Vertex v, Dir d) const {
        if (!contains(v)) return false;
        if (d == Dir::East) return v.x - offset.x < n;
        return v.y - offset.y < n;
    }
};

}  // namespace iiclab
