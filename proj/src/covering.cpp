#include "iiclab/covering.hpp"

#include <stdexcept>

namespace iiclab {

namespace {

// floor division for possibly negative numerators
inline int fdiv(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
inline int fmod_pos(int a, int b) {
    int m = a % b;
    return m < 0 ? m + b : m;
}

}  // namespace

Patch patch_of(const CoveringSystem& sys, int k, std::uint8_t sigma, Vertex v) {
    if (k < 1 || k > 30) throw std::invalid_argument("patch_of: scale out of range");
    int s = patch_side(k);
    Vertex sh = sys.shift(k);
    Vertex off = family_offset(k, sigma);
    int bx = sh.x + off.x, by = sh.y + off.y;  // family corner phase
    Patch p;
    p.k = k;
    p.side = s;
    p.sigma = sigma;
    p.corner = Vertex{bx + fdiv(v.x - bx, s) * s, by + fdiv(v.y - by, s) * s};
    return p;
}

std::array<Patch, 4> patches_at(const CoveringSystem& sys, int k, Vertex v) {
    return {patch_of(sys, k, 0, v), patch_of(sys, k, 1, v), patch_of(sys, k, 2, v),
            patch_of(sys, k, 3, v)};
}

Patch padding_witness(const CoveringSystem& sys, int k, Vertex v) {
    int r = padding_radius(k);
    Patch best = patch_of(sys, k, 0, v);
    int best_margin = best.margin(v);
    for (std::uint8_t sigma = 1; sigma < 4; ++sigma) {
        Patch p = patch_of(sys, k, sigma, v);
        int m = p.margin(v);
        if (m > best_margin) {
            best = p;
            best_margin = m;
        }
    }
    if (best_margin < r)
        throw std::logic_error("padding_witness: construction guarantee violated");
    return best;
}

std::vector<Patch> patches_overlapping(const CoveringSystem& sys, int k, const Rect& rect) {
    std::vector<Patch> out;
    if (rect.empty()) return out;
    int s = patch_side(k);
    Vertex sh = sys.shift(k);
    for (std::uint8_t sigma = 0; sigma < 4; ++sigma) {
        Vertex off = family_offset(k, sigma);
        int bx = sh.x + off.x, by = sh.y + off.y;
        int i0 = fdiv(rect.xmin - bx, s), i1 = fdiv(rect.xmax - bx, s);
        int j0 = fdiv(rect.ymin - by, s), j1 = fdiv(rect.ymax - by, s);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                out.push_back(Patch{k, Vertex{bx + i * s, by + j * s}, s, sigma});
    }
    return out;
}

int intersecting_patch_count(const CoveringSystem& sys, const Patch& p) {
    int s = p.side;
    Vertex sh = sys.shift(p.k);
    int count = 0;
    for (std::uint8_t sigma = 0; sigma < 4; ++sigma) {
        Vertex off = family_offset(p.k, sigma);
        // overlapping corners per coordinate: congruent to the family phase,
        // inside the open interval (corner - s, corner + s)
        int cx = fmod_pos(p.corner.x - (sh.x + off.x), s) == 0 ? 1 : 2;
        int cy = fmod_pos(p.corner.y - (sh.y + off.y), s) == 0 ? 1 : 2;
        count += cx * cy;
    }
    return count - 1;  // drop p itself
}

CoveringCheck verify_covering(const CoveringSystem& sys, int k, int window_n,
                              std::int64_t padding_samples, std::uint64_t check_seed) {
    CoveringCheck res;
    const int bound = 1 << k;
    const int s = patch_side(k);
    const Vertex sh = sys.shift(k);
    int bx[4], by[4];
    for (std::uint8_t sigma = 0; sigma < 4; ++sigma) {
        Vertex off = family_offset(k, sigma);
        bx[sigma] = sh.x + off.x;
        by[sigma] = sh.y + off.y;
    }

    // Exhaustive per-vertex coverage, using the same corner arithmetic as
    // patch_of with the shift hoisted out of the loop; patch_of itself is
    // cross-checked on a coarse subgrid so the two cannot drift apart.
    for (int y = -window_n; y <= window_n; ++y) {
        for (int x = -window_n; x <= window_n; ++x) {
            ++res.vertices_checked;
            bool probe = ((x + y) % 101 + 101) % 101 == 0;
            for (std::uint8_t sigma = 0; sigma < 4; ++sigma) {
                int cx = bx[sigma] + fdiv(x - bx[sigma], s) * s;
                int cy = by[sigma] + fdiv(y - by[sigma], s) * s;
                if (x < cx || x >= cx + s || y < cy || y >= cy + s) res.covered = false;
                if (probe) {
                    Patch p = patch_of(sys, k, sigma, Vertex{x, y});
                    if (p.corner.x != cx || p.corner.y != cy || !p.contains(Vertex{x, y}))
                        res.covered = false;
                }
            }
        }
    }

    // All patches of the scale share one side, so one diameter check suffices.
    if (2 * (s - 1) > bound) res.bounded = false;

    // The overlap count depends only on corner phases mod the side, never on
    // the corner itself, so probing one patch per family gives the window max.
    for (std::uint8_t sigma = 0; sigma < 4; ++sigma) {
        int m = intersecting_patch_count(sys, patch_of(sys, k, sigma, Vertex{0, 0}));
        if (m > res.max_multiplicity) res.max_multiplicity = m;
    }

    Xoshiro256pp rng(check_seed);
    const int r = padding_radius(k);
    for (std::int64_t t = 0; t < padding_samples; ++t) {
        int span = 2 * window_n + 1;
        Vertex v{int(rng.bounded(std::uint64_t(span))) - window_n,
                 int(rng.bounded(std::uint64_t(span))) - window_n};
        Patch w;
        try {
            w = padding_witness(sys, k, v);
        } catch (const std::logic_error&) {
            ++res.padding_failures;
            continue;
        }
        // Explicit geometric check, not just the margin arithmetic: the patch
        // is an axis-aligned box, so containing the L1 sphere |d|_1 = r (and
        // the center) contains the whole ball.
        bool ok = w.contains(v);
        for (int dx = -r; dx <= r && ok; ++dx) {
            int rem = r - std::abs(dx);
            ok = w.contains(Vertex{v.x + dx, v.y + rem}) &&
                 w.contains(Vertex{v.x + dx, v.y - rem});
        }
        if (!ok) ++res.padding_failures;
    }
    return res;
}

}  // namespace iiclab
