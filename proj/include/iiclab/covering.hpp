#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "iiclab/lattice.hpp"
#include "iiclab/rng.hpp"

namespace iiclab {

// Multiscale system of half-open square patches. At scale k the four shift
// families (sigma in {0,1}^2) are side-2^(k-1) tilings offset by half a side
// per coordinate, plus one uniform random shift per scale shared by all four
// families. Half-open squares keep same-family patches disjoint; the price is
// that the uniform padding radius is side/4 rather than the half-side the
// closed-square picture suggests (see padding_radius).
//
// Scale-1 degenerates to single-vertex patches with all four families equal
// (the half-side offset rounds to zero); it is kept for completeness.
struct Patch {
    int k = 1;
    Vertex corner{0, 0};
    int side = 1;
    std::uint8_t sigma = 0;  // bit0 = x offset, bit1 = y offset

    bool contains(Vertex v) const {
        return v.x >= corner.x && v.x < corner.x + side && v.y >= corner.y &&
               v.y < corner.y + side;
    }
    // largest r with the L1 ball B(v, r) inside the patch
    int margin(Vertex v) const {
        int mx = std::min(v.x - corner.x, corner.x + side - 1 - v.x);
        int my = std::min(v.y - corner.y, corner.y + side - 1 - v.y);
        return std::min(mx, my);
    }
    // graph diameter of the patch vertex set: 2(side-1) <= 2^k
    int graph_diameter() const { return 2 * (side - 1); }

    friend bool operator==(const Patch& a, const Patch& b) {
        return a.k == b.k && a.corner == b.corner && a.sigma == b.sigma;
    }
};

inline int patch_side(int k) { return 1 << (k - 1); }

// Uniform padding radius at scale k: the guaranteed L1 ball around any vertex
// inside its witness patch. side/4 = 2^(k-3) for k >= 3, zero below (the ball
// degenerates to the vertex itself).
inline int padding_radius(int k) { return k >= 3 ? (1 << (k - 3)) : 0; }

struct CoveringSystem {
    std::uint64_t seed = 0;
    bool shifted = false;  // zero shifts when false

    static CoveringSystem unshifted() { return CoveringSystem{0, false}; }
    static CoveringSystem random_shifted(std::uint64_t seed) { return CoveringSystem{seed, true}; }

    // per-scale random shift, uniform on [0, side)^2, independent across k
    Vertex shift(int k) const {
        if (!shifted) return Vertex{0, 0};
        Xoshiro256pp rng(derive_seed(seed, "covering-shift", std::uint64_t(k)));
        int s = patch_side(k);
        return Vertex{int(rng.bounded(std::uint64_t(s))), int(rng.bounded(std::uint64_t(s)))};
    }
};

// family phase of sigma at scale k (half a side, rounding to 0 at k=1)
inline Vertex family_offset(int k, std::uint8_t sigma) {
    int off = k >= 2 ? (1 << (k - 2)) : 0;
    return Vertex{(sigma & 1) ? off : 0, (sigma & 2) ? off : 0};
}

// the unique sigma-family patch containing v
Patch patch_of(const CoveringSystem& sys, int k, std::uint8_t sigma, Vertex v);

// all patches containing v at scale k, one per shift tag (duplicates as sets
// only at k=1)
std::array<Patch, 4> patches_at(const CoveringSystem& sys, int k, Vertex v);

// a patch with B(v, padding_radius(k)) inside it; exists by construction
Patch padding_witness(const CoveringSystem& sys, int k, Vertex v);

struct Rect {
    int xmin = 0, ymin = 0, xmax = -1, ymax = -1;  // inclusive; empty if max < min
    bool empty() const { return xmax < xmin || ymax < ymin; }
};

// every scale-k patch intersecting the rect, scan order within each family
std::vector<Patch> patches_overlapping(const CoveringSystem& sys, int k, const Rect& rect);

// exact count of *other* patches of the scale-k collection intersecting p
// (the collection is an infinite union of four tilings, so this is closed-
// form rectangle arithmetic: 8 for k >= 2, 3 at the degenerate scale 1)
int intersecting_patch_count(const CoveringSystem& sys, const Patch& p);

struct CoveringCheck {
    bool covered = true;       // every window vertex lies in >= 1 patch per family
    bool bounded = true;       // every patch graph-diameter <= 2^k
    int max_multiplicity = 0;  // exact max of intersecting_patch_count over the window
    std::int64_t padding_failures = 0;
    std::int64_t vertices_checked = 0;
};

// exact verification over a window S(window_n), plus padding witnesses for
// `padding_samples` seeded random vertices in the window
CoveringCheck verify_covering(const CoveringSystem& sys, int k, int window_n,
                              std::int64_t padding_samples, std::uint64_t check_seed);

}  // namespace iiclab
