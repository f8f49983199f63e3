#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "iiclab/kernels.hpp"
#include "iiclab/lattice.hpp"
#include "iiclab/rng.hpp"

namespace iiclab {

// Materialized bond configuration on S(n): one bit per edge in the frozen
// stream order. Bit e is 1 iff (edge_raw(seed, e) >> 11) < p_threshold(p),
// i.e. the e-th uniform fell below p; configurations at p <= p' on a shared
// seed are monotone-coupled by construction.
struct PercolationSample {
    BoxRegion region;
    double p = 0.5;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> words;

    bool is_open(std::int64_t edge_id) const {
        return (words[std::uint64_t(edge_id) >> 6] >> (std::uint64_t(edge_id) & 63)) & 1u;
    }
    bool open(Vertex v, Dir d) const {
        return region.edge_exists(v, d) && is_open(region.edge_index(v, d));
    }
    std::uint64_t open_count() const {
        return kernels::count_open(words.data(), std::uint64_t(region.edge_count()));
    }
};

PercolationSample sample_bond_config(int n, double p, std::uint64_t seed,
                                     kernels::Isa isa = kernels::Isa::Auto);

// Storage-free view over the same configuration: recomputes the per-edge
// uniform on demand. Bit-identical to the materialized sample (tested); used
// in rejection/estimation loops that rarely touch most of the box.
struct LazyBondSampler {
    BoxRegion region;
    std::uint64_t seed = 0;
    std::uint64_t threshold = 0;

    LazyBondSampler(int n, double p, std::uint64_t s)
        : region(n), seed(s), threshold(p_threshold(p)) {}

    bool open(Vertex v, Dir d) const {
        return region.edge_exists(v, d) && edge_open(seed, region.edge_index(v, d), threshold);
    }
};

enum class ClusterProvenance { LargestCluster, OriginArmConditioned, Component };

const char* provenance_name(ClusterProvenance p);

// A connected open cluster with a distinguished root, self-contained (owns
// its adjacency). Coordinates may be translated (largest-cluster flavor moves
// the root to the origin); `region` tracks the translated box bounds.
// Vertices are stored in row-major scan order of the original grid, so the
// layout is deterministic for a given sample.
struct RootedCluster {
    ClusterProvenance provenance = ClusterProvenance::Component;
    BoxRegion region;
    Vertex root{0, 0};
    std::vector<Vertex> vertices;
    std::vector<std::uint32_t> adj_off;  // CSR offsets, size() + 1 entries
    std::vector<std::int32_t> adj;       // neighbor local ids
    std::vector<std::int32_t> grid;      // region-local vertex index -> local id, -1 if absent
    std::uint64_t sample_seed = 0;       // seed of the accepted bond configuration
    std::uint64_t attempts = 1;          // rejection attempts consumed (conditioned flavor)
    std::int64_t sum_degree = 0;

    int size() const { return int(vertices.size()); }
    Vertex vertex(int local) const { return vertices[std::size_t(local)]; }
    int degree(int local) const { return int(adj_off[local + 1] - adj_off[local]); }
    int local_of(Vertex v) const {
        if (!region.contains(v)) return -1;
        return grid[std::size_t(region.vertex_index(v))];
    }
    int root_local() const { return local_of(root); }
};

// Component containing v, rooted at v. Empty when v is outside the box or
// has no open incident edge (single-vertex clusters are rejected: a walk
// needs somewhere to go).
std::optional<RootedCluster> open_cluster(const PercolationSample& sample, Vertex v);

// Largest component; ties break toward the component containing the smallest
// vertex in scan order. Root drawn uniformly from the component off the
// sample's derived seed stream; no translation applied here.
RootedCluster largest_cluster(const PercolationSample& sample);

enum class IicFlavor { Largest, Conditioned };

const char* flavor_name(IicFlavor f);

struct RejectionBudgetExceeded : std::runtime_error {
    std::uint64_t attempts;
    explicit RejectionBudgetExceeded(std::uint64_t a)
        : std::runtime_error("conditioned sampling: rejection budget exhausted after " +
                             std::to_string(a) + " attempts"),
          attempts(a) {}
};

// Finite-volume IIC stand-ins.
//   Largest:     sample, take the largest component, root it uniformly and
//                translate the root to the origin.
//   Conditioned: resample until the origin's component reaches the box
//                boundary; root = origin, no translation. Throws
//                RejectionBudgetExceeded past `rejection_cap` attempts
//                (attempt i uses derive_seed(seed, "attempt", i)).
RootedCluster iic_approximant(IicFlavor flavor, int n, std::uint64_t seed, double p = 0.5,
                              std::uint64_t rejection_cap = 1'000'000);

// Reachability 0 <-> boundary of S(n) for a lazy configuration; the
// conditioned-flavor acceptance test, exposed for the arm estimators.
struct BoxScratch {
    std::vector<std::uint32_t> stamp;
    std::vector<std::int32_t> queue;
    std::vector<std::int32_t> dist;
    std::uint32_t epoch = 0;

    void ensure(std::int64_t vertex_count) {
        if (std::int64_t(stamp.size()) < vertex_count) {
            stamp.assign(std::size_t(vertex_count), 0);
            queue.resize(std::size_t(vertex_count));
            dist.resize(std::size_t(vertex_count));
            epoch = 0;
        }
    }
    std::uint32_t next_epoch() { return ++epoch; }
};

bool origin_reaches_boundary(const LazyBondSampler& bonds, BoxScratch& scratch);

}  // namespace iiclab
