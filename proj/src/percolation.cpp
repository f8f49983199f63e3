#include "iiclab/percolation.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace iiclab {

namespace {

constexpr std::array<Vertex, 4> kSteps = {Vertex{1, 0}, Vertex{-1, 0}, Vertex{0, 1},
                                          Vertex{0, -1}};

// open test for the edge between v and its neighbor in direction step
template <typename Openness>
bool step_open(const Openness& bonds, Vertex v, Vertex w, int step_idx) {
    switch (step_idx) {
        case 0: return bonds.open(v, Dir::East);
        case 1: return bonds.open(w, Dir::East);
        case 2: return bonds.open(v, Dir::North);
        default: return bonds.open(w, Dir::North);
    }
}

// BFS component of `start`; returns vertices marked with `epoch` in scratch
// and the component listed in visit order through scratch.queue.
template <typename Openness>
int flood_component(const Openness& bonds, Vertex start, BoxScratch& scratch) {
    const BoxRegion& region = bonds.region;
    scratch.ensure(region.vertex_count());
    const std::uint32_t epoch = scratch.next_epoch();
    int head = 0, tail = 0;
    std::int64_t sidx = region.vertex_index(start);
    scratch.stamp[std::size_t(sidx)] = epoch;
    scratch.queue[std::size_t(tail++)] = std::int32_t(sidx);
    while (head < tail) {
        std::int64_t vi = scratch.queue[std::size_t(head++)];
        Vertex v = region.vertex_at(vi);
        for (int s = 0; s < 4; ++s) {
            Vertex w{v.x + kSteps[std::size_t(s)].x, v.y + kSteps[std::size_t(s)].y};
            if (!region.contains(w)) continue;
            std::int64_t wi = region.vertex_index(w);
            if (scratch.stamp[std::size_t(wi)] == epoch) continue;
            if (!step_open(bonds, v, w, s)) continue;
            scratch.stamp[std::size_t(wi)] = epoch;
            scratch.queue[std::size_t(tail++)] = std::int32_t(wi);
        }
    }
    return tail;
}

// Assemble a RootedCluster from the vertices currently stamped with
// scratch.epoch. Scan order makes the local ids canonical.
template <typename Openness>
RootedCluster assemble(const Openness& bonds, BoxScratch& scratch, Vertex root,
                       ClusterProvenance prov, std::uint64_t sample_seed) {
    const BoxRegion& region = bonds.region;
    const std::uint32_t epoch = scratch.epoch;
    RootedCluster c;
    c.provenance = prov;
    c.region = region;
    c.root = root;
    c.sample_seed = sample_seed;
    c.grid.assign(std::size_t(region.vertex_count()), -1);
    for (std::int64_t i = 0; i < region.vertex_count(); ++i) {
        if (scratch.stamp[std::size_t(i)] == epoch) {
            c.grid[std::size_t(i)] = int(c.vertices.size());
            c.vertices.push_back(region.vertex_at(i));
        }
    }
    c.adj_off.assign(c.vertices.size() + 1, 0);
    for (std::size_t li = 0; li < c.vertices.size(); ++li) {
        Vertex v = c.vertices[li];
        int deg = 0;
        for (int s = 0; s < 4; ++s) {
            Vertex w{v.x + kSteps[std::size_t(s)].x, v.y + kSteps[std::size_t(s)].y};
            if (!region.contains(w)) continue;
            if (step_open(bonds, v, w, s)) ++deg;
        }
        c.adj_off[li + 1] = c.adj_off[li] + std::uint32_t(deg);
    }
    c.adj.resize(c.adj_off.back());
    for (std::size_t li = 0; li < c.vertices.size(); ++li) {
        Vertex v = c.vertices[li];
        std::uint32_t at = c.adj_off[li];
        for (int s = 0; s < 4; ++s) {
            Vertex w{v.x + kSteps[std::size_t(s)].x, v.y + kSteps[std::size_t(s)].y};
            if (!region.contains(w)) continue;
            if (!step_open(bonds, v, w, s)) continue;
            c.adj[at++] = c.grid[std::size_t(region.vertex_index(w))];
        }
    }
    c.sum_degree = std::int64_t(c.adj.size());
    return c;
}

}  // namespace

const char* provenance_name(ClusterProvenance p) {
    switch (p) {
        case ClusterProvenance::LargestCluster: return "largest-cluster";
        case ClusterProvenance::OriginArmConditioned: return "origin-arm-conditioned";
        case ClusterProvenance::Component: return "component";
    }
    return "?";
}

const char* flavor_name(IicFlavor f) {
    return f == IicFlavor::Largest ? "largest" : "conditioned";
}

PercolationSample sample_bond_config(int n, double p, std::uint64_t seed, kernels::Isa isa) {
    if (n < 1) throw std::invalid_argument("sample_bond_config: n must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_bond_config: p outside [0,1]");
    PercolationSample s;
    s.region = BoxRegion(n);
    s.p = p;
    s.seed = seed;
    std::uint64_t nedges = std::uint64_t(s.region.edge_count());
    s.words.assign(std::size_t((nedges + 63) / 64), 0);
    kernels::fill_open_edges(s.words.data(), nedges, seed, p, isa);
    return s;
}

std::optional<RootedCluster> open_cluster(const PercolationSample& sample, Vertex v) {
    if (!sample.region.contains(v)) return std::nullopt;
    bool any = false;
    for (int s = 0; s < 4; ++s) {
        Vertex w{v.x + kSteps[std::size_t(s)].x, v.y + kSteps[std::size_t(s)].y};
        if (sample.region.contains(w) && step_open(sample, v, w, s)) any = true;
    }
    if (!any) return std::nullopt;
    BoxScratch scratch;
    flood_component(sample, v, scratch);
    return assemble(sample, scratch, v, ClusterProvenance::Component, sample.seed);
}

RootedCluster largest_cluster(const PercolationSample& sample) {
    const BoxRegion& region = sample.region;
    BoxScratch scratch;
    scratch.ensure(region.vertex_count());

    // component labels via repeated flood in scan order; the scan also fixes
    // the tie-break (first-discovered component wins at equal size)
    std::vector<std::int32_t> comp(std::size_t(region.vertex_count()), -1);
    std::int32_t ncomp = 0;
    std::int64_t best_size = 0;
    std::int32_t best_comp = -1;
    for (std::int64_t i = 0; i < region.vertex_count(); ++i) {
        if (comp[std::size_t(i)] >= 0) continue;
        int sz = flood_component(sample, region.vertex_at(i), scratch);
        for (int q = 0; q < sz; ++q) comp[std::size_t(scratch.queue[std::size_t(q)])] = ncomp;
        if (sz > best_size) {
            best_size = sz;
            best_comp = ncomp;
        }
        ++ncomp;
    }
    if (best_size < 2)
        throw std::runtime_error("largest_cluster: sample has no open edges");

    // re-stamp the winning component for assembly
    const std::uint32_t epoch = scratch.next_epoch();
    std::vector<std::int64_t> members;
    members.reserve(std::size_t(best_size));
    for (std::int64_t i = 0; i < region.vertex_count(); ++i) {
        if (comp[std::size_t(i)] == best_comp) {
            scratch.stamp[std::size_t(i)] = epoch;
            members.push_back(i);
        }
    }
    std::uint64_t pick = Xoshiro256pp(derive_seed(sample.seed, "root")).bounded(members.size());
    Vertex root = region.vertex_at(members[std::size_t(pick)]);
    return assemble(sample, scratch, root, ClusterProvenance::LargestCluster, sample.seed);
}

bool origin_reaches_boundary(const LazyBondSampler& bonds, BoxScratch& scratch) {
    const BoxRegion& region = bonds.region;
    scratch.ensure(region.vertex_count());
    const std::uint32_t epoch = scratch.next_epoch();
    const int n = region.n;
    int head = 0, tail = 0;
    std::int64_t oidx = region.vertex_index(region.offset);
    scratch.stamp[std::size_t(oidx)] = epoch;
    scratch.queue[std::size_t(tail++)] = std::int32_t(oidx);
    if (n == 0) return true;
    while (head < tail) {
        std::int64_t vi = scratch.queue[std::size_t(head++)];
        Vertex v = region.vertex_at(vi);
        for (int s = 0; s < 4; ++s) {
            Vertex w{v.x + kSteps[std::size_t(s)].x, v.y + kSteps[std::size_t(s)].y};
            if (!region.contains(w)) continue;
            std::int64_t wi = region.vertex_index(w);
            if (scratch.stamp[std::size_t(wi)] == epoch) continue;
            if (!step_open(bonds, v, w, s)) continue;
            if (region.on_boundary(w)) return true;
            scratch.stamp[std::size_t(wi)] = epoch;
            scratch.queue[std::size_t(tail++)] = std::int32_t(wi);
        }
    }
    return false;
}

RootedCluster iic_approximant(IicFlavor flavor, int n, std::uint64_t seed, double p,
                              std::uint64_t rejection_cap) {
    if (n < 1) throw std::invalid_argument("iic_approximant: n must be >= 1");
    if (flavor == IicFlavor::Largest) {
        PercolationSample s = sample_bond_config(n, p, seed);
        RootedCluster c = largest_cluster(s);
        // translate the root to the origin
        Vertex rho = c.root;
        for (auto& v : c.vertices) v = Vertex{v.x - rho.x, v.y - rho.y};
        c.region.offset = Vertex{-rho.x, -rho.y};
        c.root = Vertex{0, 0};
        c.provenance = ClusterProvenance::LargestCluster;
        return c;
    }

    BoxScratch scratch;
    for (std::uint64_t attempt = 1; attempt <= rejection_cap; ++attempt) {
        std::uint64_t attempt_seed = derive_seed(seed, "attempt", attempt);
        LazyBondSampler bonds(n, p, attempt_seed);
        if (!origin_reaches_boundary(bonds, scratch)) continue;
        flood_component(bonds, Vertex{0, 0}, scratch);
        RootedCluster c = assemble(bonds, scratch, Vertex{0, 0},
                                   ClusterProvenance::OriginArmConditioned, attempt_seed);
        c.attempts = attempt;
        return c;
    }
    throw RejectionBudgetExceeded(rejection_cap);
}

}  // namespace iiclab
