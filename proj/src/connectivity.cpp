#include "iiclab/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iiclab {

namespace {

inline Rect clamp_to_region(const Rect& rect, const BoxRegion& region) {
    Rect r;
    r.xmin = std::max(rect.xmin, region.offset.x - region.n);
    r.xmax = std::min(rect.xmax, region.offset.x + region.n);
    r.ymin = std::max(rect.ymin, region.offset.y - region.n);
    r.ymax = std::min(rect.ymax, region.offset.y + region.n);
    return r;
}

inline bool rect_contains(const Rect& r, Vertex v) {
    return v.x >= r.xmin && v.x <= r.xmax && v.y >= r.ymin && v.y <= r.ymax;
}

// ---- unit-capacity flow with split vertices ----
//
// node ids: in(i) = 2i, out(i) = 2i+1, then up to three extra nodes
// (gates/sink). Source is out(source); the source's in->out arc is omitted so
// no path can transit through it.
struct FlowNet {
    std::vector<std::int32_t> head;
    std::vector<std::int32_t> nxt;
    std::vector<std::int32_t> to;
    std::vector<std::int8_t> cap;
    std::vector<std::int32_t> parent_arc;
    std::vector<std::int32_t> queue;
    std::vector<std::uint32_t> mark;
    std::uint32_t epoch = 0;

    void reset(int nodes) {
        head.assign(std::size_t(nodes), -1);
        nxt.clear();
        to.clear();
        cap.clear();
        parent_arc.resize(std::size_t(nodes));
        queue.resize(std::size_t(nodes));
        mark.assign(std::size_t(nodes), 0);
        epoch = 0;
    }

    void arc(int u, int v, int c) {
        // forward arc
        nxt.push_back(head[std::size_t(u)]);
        head[std::size_t(u)] = std::int32_t(to.size());
        to.push_back(v);
        cap.push_back(std::int8_t(c));
        // residual arc
        nxt.push_back(head[std::size_t(v)]);
        head[std::size_t(v)] = std::int32_t(to.size());
        to.push_back(u);
        cap.push_back(0);
    }

    bool augment(int s, int t) {
        ++epoch;
        int head_q = 0, tail_q = 0;
        queue[std::size_t(tail_q++)] = s;
        mark[std::size_t(s)] = epoch;
        while (head_q < tail_q) {
            int u = queue[std::size_t(head_q++)];
            for (std::int32_t a = head[std::size_t(u)]; a >= 0; a = nxt[std::size_t(a)]) {
                if (cap[std::size_t(a)] <= 0) continue;
                int v = to[std::size_t(a)];
                if (mark[std::size_t(v)] == epoch) continue;
                mark[std::size_t(v)] = epoch;
                parent_arc[std::size_t(v)] = a;
                if (v == t) {
                    for (int x = t; x != s;) {
                        std::int32_t pa = parent_arc[std::size_t(x)];
                        --cap[std::size_t(pa)];
                        ++cap[std::size_t(pa ^ 1)];
                        x = to[std::size_t(pa ^ 1)];
                    }
                    return true;
                }
                queue[std::size_t(tail_q++)] = v;
            }
        }
        return false;
    }
};

void build_split_arcs(FlowNet& net, const LocalGraph& g, int source) {
    for (int i = 0; i < g.nv; ++i) {
        if (i != source) net.arc(2 * i, 2 * i + 1, 1);
    }
    for (int i = 0; i < g.nv; ++i) {
        for (std::uint32_t a = g.off[std::size_t(i)]; a < g.off[std::size_t(i) + 1]; ++a) {
            int j = g.adj[a];
            net.arc(2 * i + 1, 2 * j, 1);  // out(i) -> in(j); the mirror arc is
                                           // added when j's list reaches i
        }
    }
}

}  // namespace

LocalGraph induced_subgraph(const RootedCluster& cluster, const std::optional<Rect>& rect,
                            std::vector<std::uint8_t>* exit_mask) {
    LocalGraph g;
    if (!rect.has_value()) {
        g.nv = cluster.size();
        g.off = cluster.adj_off;
        g.adj = cluster.adj;
        g.back.resize(std::size_t(g.nv));
        for (int i = 0; i < g.nv; ++i) g.back[std::size_t(i)] = i;
        if (exit_mask) exit_mask->assign(std::size_t(g.nv), 0);
        return g;
    }

    const Rect inner = clamp_to_region(*rect, cluster.region);
    if (inner.empty()) {
        if (exit_mask) exit_mask->clear();
        return g;
    }
    for (int y = inner.ymin; y <= inner.ymax; ++y) {
        for (int x = inner.xmin; x <= inner.xmax; ++x) {
            int c = cluster.local_of(Vertex{x, y});
            if (c >= 0) g.back.push_back(c);
        }
    }
    g.nv = int(g.back.size());
    if (exit_mask) exit_mask->assign(std::size_t(g.nv), 0);

    // cluster-local -> subgraph-local: binary search in the ascending back[]
    auto sub_of = [&](std::int32_t c) {
        auto it = std::lower_bound(g.back.begin(), g.back.end(), c);
        return (it != g.back.end() && *it == c) ? std::int32_t(it - g.back.begin())
                                                : std::int32_t(-1);
    };

    g.off.assign(std::size_t(g.nv) + 1, 0);
    for (int i = 0; i < g.nv; ++i) {
        std::int32_t c = g.back[std::size_t(i)];
        std::uint32_t deg = 0;
        for (std::uint32_t a = cluster.adj_off[std::size_t(c)];
             a < cluster.adj_off[std::size_t(c) + 1]; ++a) {
            Vertex w = cluster.vertex(cluster.adj[a]);
            if (rect_contains(*rect, w)) {
                ++deg;
            } else if (exit_mask) {
                (*exit_mask)[std::size_t(i)] = 1;
            }
        }
        g.off[std::size_t(i) + 1] = g.off[std::size_t(i)] + deg;
    }
    g.adj.resize(g.off.back());
    for (int i = 0; i < g.nv; ++i) {
        std::int32_t c = g.back[std::size_t(i)];
        std::uint32_t at = g.off[std::size_t(i)];
        for (std::uint32_t a = cluster.adj_off[std::size_t(c)];
             a < cluster.adj_off[std::size_t(c) + 1]; ++a) {
            std::int32_t cw = cluster.adj[a];
            if (rect_contains(*rect, cluster.vertex(cw))) g.adj[at++] = sub_of(cw);
        }
    }
    return g;
}

int disjoint_path_count(const LocalGraph& g, int source, const std::vector<std::uint8_t>& target) {
    if (g.nv == 0) return 0;
    if (target[std::size_t(source)]) {
        // degenerate: the trivial path already sits on a target
        return 2;
    }
    FlowNet net;
    const int sink = 2 * g.nv;
    net.reset(2 * g.nv + 1);
    build_split_arcs(net, g, source);
    for (int i = 0; i < g.nv; ++i)
        if (target[std::size_t(i)]) net.arc(2 * i + 1, sink, 1);
    int flow = 0;
    while (flow < 2 && net.augment(2 * source + 1, sink)) ++flow;
    return flow;
}

bool disjoint_paths_to_both(const LocalGraph& g, int source,
                            const std::vector<std::uint8_t>& target1,
                            const std::vector<std::uint8_t>& target2) {
    bool deg1 = target1[std::size_t(source)];
    bool deg2 = target2[std::size_t(source)];
    if (deg1 && deg2) return true;
    if (deg1 || deg2) {
        // one arm is trivial; the other needs any single path
        const auto& other = deg1 ? target2 : target1;
        FlowNet net;
        const int sink = 2 * g.nv;
        net.reset(2 * g.nv + 1);
        build_split_arcs(net, g, source);
        for (int i = 0; i < g.nv; ++i)
            if (other[std::size_t(i)]) net.arc(2 * i + 1, sink, 1);
        return net.augment(2 * source + 1, sink);
    }
    FlowNet net;
    const int gate1 = 2 * g.nv, gate2 = 2 * g.nv + 1, sink = 2 * g.nv + 2;
    net.reset(2 * g.nv + 3);
    build_split_arcs(net, g, source);
    for (int i = 0; i < g.nv; ++i) {
        if (target1[std::size_t(i)]) net.arc(2 * i + 1, gate1, 1);
        if (target2[std::size_t(i)]) net.arc(2 * i + 1, gate2, 1);
    }
    net.arc(gate1, sink, 1);
    net.arc(gate2, sink, 1);
    int flow = 0;
    while (flow < 2 && net.augment(2 * source + 1, sink)) ++flow;
    return flow == 2;
}

std::vector<std::vector<std::int32_t>> biconnected_blocks(const LocalGraph& g) {
    std::vector<std::vector<std::int32_t>> blocks;
    if (g.nv == 0) return blocks;

    std::vector<std::int32_t> disc(std::size_t(g.nv), -1), low(std::size_t(g.nv), 0);
    std::vector<std::uint32_t> cursor(std::size_t(g.nv), 0);
    std::vector<std::int32_t> parent(std::size_t(g.nv), -1);
    std::vector<std::pair<std::int32_t, std::int32_t>> estack;
    std::vector<std::int32_t> vstack;
    std::vector<std::uint32_t> in_block(std::size_t(g.nv), 0);
    std::uint32_t block_epoch = 0;
    int timer = 0;

    auto emit_block = [&](std::int32_t u, std::int32_t w) {
        ++block_epoch;
        std::vector<std::int32_t> blk;
        while (!estack.empty()) {
            auto [a, b] = estack.back();
            estack.pop_back();
            if (in_block[std::size_t(a)] != block_epoch) {
                in_block[std::size_t(a)] = block_epoch;
                blk.push_back(a);
            }
            if (in_block[std::size_t(b)] != block_epoch) {
                in_block[std::size_t(b)] = block_epoch;
                blk.push_back(b);
            }
            if (a == u && b == w) break;
        }
        blocks.push_back(std::move(blk));
    };

    for (int root = 0; root < g.nv; ++root) {
        if (disc[std::size_t(root)] >= 0) continue;
        vstack.push_back(root);
        disc[std::size_t(root)] = low[std::size_t(root)] = timer++;
        while (!vstack.empty()) {
            std::int32_t v = vstack.back();
            if (cursor[std::size_t(v)] < g.off[std::size_t(v) + 1] - g.off[std::size_t(v)]) {
                std::int32_t w = g.adj[g.off[std::size_t(v)] + cursor[std::size_t(v)]++];
                if (disc[std::size_t(w)] < 0) {
                    parent[std::size_t(w)] = v;
                    estack.emplace_back(v, w);
                    disc[std::size_t(w)] = low[std::size_t(w)] = timer++;
                    vstack.push_back(w);
                } else if (w != parent[std::size_t(v)] &&
                           disc[std::size_t(w)] < disc[std::size_t(v)]) {
                    estack.emplace_back(v, w);
                    low[std::size_t(v)] = std::min(low[std::size_t(v)], disc[std::size_t(w)]);
                }
            } else {
                vstack.pop_back();
                std::int32_t p = parent[std::size_t(v)];
                if (p >= 0) {
                    low[std::size_t(p)] = std::min(low[std::size_t(p)], low[std::size_t(v)]);
                    if (low[std::size_t(v)] >= disc[std::size_t(p)]) emit_block(p, v);
                }
            }
        }
    }
    return blocks;
}

// ---- arm events ----

namespace {

constexpr Vertex kNb[4] = {Vertex{1, 0}, Vertex{-1, 0}, Vertex{0, 1}, Vertex{0, -1}};

template <typename Openness>
bool open_between(const Openness& bonds, Vertex v, Vertex w) {
    if (w.x == v.x + 1) return bonds.open(v, Dir::East);
    if (w.x == v.x - 1) return bonds.open(w, Dir::East);
    if (w.y == v.y + 1) return bonds.open(v, Dir::North);
    return bonds.open(w, Dir::North);
}

// Origin component within S(n) as a LocalGraph; back[] holds box-local
// vertex indices. Also reports which subgraph vertices sit on ∂S(n).
struct OriginComponent {
    LocalGraph g;
    std::vector<std::uint8_t> on_boundary;
    bool touches_boundary = false;
    int origin_local = -1;
};

template <typename Openness>
OriginComponent origin_component(const Openness& bonds, int n, BoxScratch& scratch) {
    OriginComponent out;
    const BoxRegion box(n);
    scratch.ensure(box.vertex_count());
    const std::uint32_t epoch = scratch.next_epoch();

    std::vector<std::int32_t>& order = scratch.queue;
    int tail = 0;
    std::int64_t oidx = box.vertex_index(Vertex{0, 0});
    scratch.stamp[std::size_t(oidx)] = epoch;
    order[std::size_t(tail++)] = std::int32_t(oidx);
    int head = 0;
    while (head < tail) {
        std::int64_t vi = order[std::size_t(head++)];
        Vertex v = box.vertex_at(vi);
        for (const Vertex& d : kNb) {
            Vertex w{v.x + d.x, v.y + d.y};
            if (!box.contains(w)) continue;
            std::int64_t wi = box.vertex_index(w);
            if (scratch.stamp[std::size_t(wi)] == epoch) continue;
            if (!open_between(bonds, v, w)) continue;
            scratch.stamp[std::size_t(wi)] = epoch;
            order[std::size_t(tail++)] = std::int32_t(wi);
        }
    }

    // subgraph-local ids in visit order; dist[] doubles as the id map
    out.g.nv = tail;
    out.g.back.assign(order.begin(), order.begin() + tail);
    for (int i = 0; i < tail; ++i) scratch.dist[std::size_t(out.g.back[std::size_t(i)])] = i;
    out.on_boundary.assign(std::size_t(tail), 0);
    out.g.off.assign(std::size_t(tail) + 1, 0);
    for (int i = 0; i < tail; ++i) {
        Vertex v = box.vertex_at(out.g.back[std::size_t(i)]);
        if (box.on_boundary(v)) {
            out.on_boundary[std::size_t(i)] = 1;
            out.touches_boundary = true;
        }
        std::uint32_t deg = 0;
        for (const Vertex& d : kNb) {
            Vertex w{v.x + d.x, v.y + d.y};
            if (!box.contains(w)) continue;
            std::int64_t wi = box.vertex_index(w);
            if (scratch.stamp[std::size_t(wi)] == epoch && open_between(bonds, v, w)) ++deg;
        }
        out.g.off[std::size_t(i) + 1] = out.g.off[std::size_t(i)] + deg;
    }
    out.g.adj.resize(out.g.off.back());
    for (int i = 0; i < tail; ++i) {
        Vertex v = box.vertex_at(out.g.back[std::size_t(i)]);
        std::uint32_t at = out.g.off[std::size_t(i)];
        for (const Vertex& d : kNb) {
            Vertex w{v.x + d.x, v.y + d.y};
            if (!box.contains(w)) continue;
            std::int64_t wi = box.vertex_index(w);
            if (scratch.stamp[std::size_t(wi)] == epoch && open_between(bonds, v, w))
                out.g.adj[at++] = scratch.dist[std::size_t(wi)];
        }
    }
    out.origin_local = scratch.dist[std::size_t(oidx)];
    return out;
}

}  // namespace

bool one_arm(const PercolationSample& sample, int n) {
    if (n < 1 || n > sample.region.n) throw std::invalid_argument("one_arm: bad radius");
    BoxScratch scratch;
    // BFS with early exit on boundary touch
    const BoxRegion box(n);
    scratch.ensure(box.vertex_count());
    const std::uint32_t epoch = scratch.next_epoch();
    int head = 0, tail = 0;
    std::int64_t oidx = box.vertex_index(Vertex{0, 0});
    scratch.stamp[std::size_t(oidx)] = epoch;
    scratch.queue[std::size_t(tail++)] = std::int32_t(oidx);
    while (head < tail) {
        Vertex v = box.vertex_at(scratch.queue[std::size_t(head++)]);
        for (const Vertex& d : kNb) {
            Vertex w{v.x + d.x, v.y + d.y};
            if (!box.contains(w)) continue;
            std::int64_t wi = box.vertex_index(w);
            if (scratch.stamp[std::size_t(wi)] == epoch) continue;
            if (!open_between(sample, v, w)) continue;
            if (box.on_boundary(w)) return true;
            scratch.stamp[std::size_t(wi)] = epoch;
            scratch.queue[std::size_t(tail++)] = std::int32_t(wi);
        }
    }
    return false;
}

bool two_arm(const PercolationSample& sample, int n) {
    if (n < 1 || n > sample.region.n) throw std::invalid_argument("two_arm: bad radius");
    BoxScratch scratch;
    auto comp = origin_component(sample, n, scratch);
    return disjoint_path_count(comp.g, comp.origin_local, comp.on_boundary) >= 2;
}

double ArmCell::pi1_se() const {
    if (!trials) return 0.0;
    double p = pi1();
    return std::sqrt(p * (1.0 - p) / double(trials));
}
double ArmCell::pi2_se() const {
    if (!trials) return 0.0;
    double p = pi2();
    return std::sqrt(p * (1.0 - p) / double(trials));
}

ArmStats estimate_arms(std::span<const int> radii, std::int64_t trials, std::uint64_t seed) {
    ArmStats stats;
    BoxScratch scratch;
    for (int n : radii) {
        if (n < 1) throw std::invalid_argument("estimate_arms: radius must be >= 1");
        ArmCell cell;
        cell.n = n;
        cell.trials = trials;
        std::uint64_t radius_seed = derive_seed(seed, "arms-n", std::uint64_t(n));
        for (std::int64_t t = 0; t < trials; ++t) {
            LazyBondSampler bonds(n, 0.5, derive_seed(radius_seed, "trial", std::uint64_t(t)));
            auto comp = origin_component(bonds, n, scratch);
            bool one = comp.touches_boundary;
            bool two = disjoint_path_count(comp.g, comp.origin_local, comp.on_boundary) >= 2;
            if (one) ++cell.one_arm_hits;
            if (two) ++cell.two_arm_hits;
            if (two && !one) ++cell.implication_violations;
        }
        stats.cells.push_back(cell);
    }
    return stats;
}

// ---- patch backbone and depth ----

namespace {

inline Rect patch_rect(const Patch& p) {
    return Rect{p.corner.x, p.corner.y, p.corner.x + p.side - 1, p.corner.y + p.side - 1};
}

// margin of v inside an arbitrary rect
inline int rect_margin(const Rect& r, Vertex v) {
    return std::min(std::min(v.x - r.xmin, r.xmax - v.x), std::min(v.y - r.ymin, r.ymax - v.y));
}

// g plus a virtual node (id g.nv) adjacent to every masked vertex
LocalGraph with_virtual_node(const LocalGraph& g, const std::vector<std::uint8_t>& mask) {
    LocalGraph h;
    h.nv = g.nv + 1;
    h.off.assign(std::size_t(h.nv) + 1, 0);
    std::uint32_t extra = 0;
    for (int i = 0; i < g.nv; ++i) {
        std::uint32_t deg = g.off[std::size_t(i) + 1] - g.off[std::size_t(i)];
        if (mask[std::size_t(i)]) ++deg, ++extra;
        h.off[std::size_t(i) + 1] = h.off[std::size_t(i)] + deg;
    }
    h.off[std::size_t(h.nv)] = h.off[std::size_t(g.nv)] + extra;
    h.adj.resize(h.off.back());
    std::uint32_t t_at = h.off[std::size_t(g.nv)];
    for (int i = 0; i < g.nv; ++i) {
        std::uint32_t at = h.off[std::size_t(i)];
        for (std::uint32_t a = g.off[std::size_t(i)]; a < g.off[std::size_t(i) + 1]; ++a)
            h.adj[at++] = g.adj[a];
        if (mask[std::size_t(i)]) {
            h.adj[at++] = g.nv;
            h.adj[t_at++] = i;
        }
    }
    return h;
}

// candidates = exit vertices plus vertices sharing a non-bridge block with
// the virtual exit node; sound superset of the backbone (two disjoint paths
// force a common 2-connected block with the exits)
std::vector<std::int32_t> backbone_candidates(const LocalGraph& g,
                                              const std::vector<std::uint8_t>& exits) {
    std::vector<std::int32_t> cand;
    bool any_exit = false;
    for (std::uint8_t e : exits)
        if (e) any_exit = true;
    if (!any_exit) return cand;

    LocalGraph h = with_virtual_node(g, exits);
    std::vector<std::uint8_t> in_cand(std::size_t(g.nv), 0);
    for (int i = 0; i < g.nv; ++i)
        if (exits[std::size_t(i)]) in_cand[std::size_t(i)] = 1;
    for (const auto& blk : biconnected_blocks(h)) {
        if (blk.size() < 3) continue;
        bool has_t = false;
        for (std::int32_t v : blk)
            if (v == g.nv) has_t = true;
        if (!has_t) continue;
        for (std::int32_t v : blk)
            if (v != g.nv) in_cand[std::size_t(v)] = 1;
    }
    for (int i = 0; i < g.nv; ++i)
        if (in_cand[std::size_t(i)]) cand.push_back(i);
    return cand;
}

}  // namespace

std::vector<std::int32_t> exit_vertices(const RootedCluster& cluster, const Rect& rect) {
    std::vector<std::uint8_t> exits;
    LocalGraph g = induced_subgraph(cluster, rect, &exits);
    std::vector<std::int32_t> out;
    for (int i = 0; i < g.nv; ++i)
        if (exits[std::size_t(i)]) out.push_back(g.back[std::size_t(i)]);
    return out;
}

std::vector<std::int32_t> backbone(const RootedCluster& cluster, const Rect& rect,
                                   BackboneEngine engine) {
    std::vector<std::uint8_t> exits;
    LocalGraph g = induced_subgraph(cluster, rect, &exits);
    std::vector<std::int32_t> cand = backbone_candidates(g, exits);
    std::vector<std::int32_t> out;
    for (std::int32_t i : cand) {
        // Blocks engine trusts the prefilter; Flow confirms non-exits
        if (!exits[std::size_t(i)] && engine == BackboneEngine::Flow &&
            disjoint_path_count(g, i, exits) < 2)
            continue;
        out.push_back(g.back[std::size_t(i)]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

int patch_depth(const RootedCluster& cluster, const Rect& rect) {
    std::vector<std::uint8_t> exits;
    LocalGraph g = induced_subgraph(cluster, rect, &exits);
    if (g.nv == 0) return 0;
    // BFS from the exit set inside the patch subgraph
    std::vector<std::uint8_t> seen(std::size_t(g.nv), 0);
    std::vector<std::int32_t> queue;
    queue.reserve(std::size_t(g.nv));
    for (int i = 0; i < g.nv; ++i)
        if (exits[std::size_t(i)]) {
            seen[std::size_t(i)] = 1;
            queue.push_back(i);
        }
    for (std::size_t h = 0; h < queue.size(); ++h) {
        std::int32_t v = queue[h];
        for (std::uint32_t a = g.off[std::size_t(v)]; a < g.off[std::size_t(v) + 1]; ++a) {
            std::int32_t w = g.adj[a];
            if (!seen[std::size_t(w)]) {
                seen[std::size_t(w)] = 1;
                queue.push_back(w);
            }
        }
    }
    int depth = 0;
    bool any = false;
    for (std::int32_t v : queue) {
        any = true;
        int m = rect_margin(rect, cluster.vertex(g.back[std::size_t(v)]));
        if (m > depth) depth = m;
    }
    return any ? depth : 0;
}

int deep_depth_threshold(double epsilon, int side) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("deep_depth_threshold: epsilon must be positive");
    return int(std::ceil(epsilon * double(side) - 1e-9));
}

DeepBackboneResult deep_backbone_union(const RootedCluster& cluster, const CoveringSystem& sys,
                                       int k, double epsilon, BackboneEngine engine) {
    DeepBackboneResult res;
    res.in_union.assign(std::size_t(cluster.size()), 0);
    const int side = patch_side(k);
    const int thr = deep_depth_threshold(epsilon, side);
    if (thr > (side - 1) / 2) return res;  // no patch can be deep at this scale

    Rect bbox{cluster.region.offset.x - cluster.region.n, cluster.region.offset.y - cluster.region.n,
              cluster.region.offset.x + cluster.region.n,
              cluster.region.offset.y + cluster.region.n};
    for (const Patch& p : patches_overlapping(sys, k, bbox)) {
        Rect r = patch_rect(p);
        ++res.patches_seen;
        if (patch_depth(cluster, r) < thr) continue;
        ++res.patches_deep;
        for (std::int32_t c : backbone(cluster, r, engine)) res.in_union[std::size_t(c)] = 1;
    }
    int root = cluster.root_local();
    for (int i = 0; i < cluster.size(); ++i) {
        if (res.in_union[std::size_t(i)]) {
            ++res.union_size;
            res.union_degree_mass += cluster.degree(i);
        }
    }
    res.root_in_union = root >= 0 && res.in_union[std::size_t(root)] != 0;
    return res;
}

bool root_in_deep_backbone(const RootedCluster& cluster, const CoveringSystem& sys, int k,
                           double epsilon, BackboneEngine engine) {
    const int side = patch_side(k);
    const int thr = deep_depth_threshold(epsilon, side);
    if (thr > (side - 1) / 2) return false;
    int root = cluster.root_local();
    if (root < 0) return false;
    for (const Patch& p : patches_at(sys, k, cluster.root)) {
        Rect r = patch_rect(p);
        if (patch_depth(cluster, r) < thr) continue;
        std::vector<std::uint8_t> exits;
        LocalGraph g = induced_subgraph(cluster, r, &exits);
        // locate the root inside the subgraph
        auto it = std::lower_bound(g.back.begin(), g.back.end(), root);
        if (it == g.back.end() || *it != root) continue;
        int rl = int(it - g.back.begin());
        if (exits[std::size_t(rl)]) return true;
        if (engine == BackboneEngine::Flow) {
            if (disjoint_path_count(g, rl, exits) >= 2) return true;
        } else {
            std::vector<std::int32_t> cand = backbone_candidates(g, exits);
            if (std::binary_search(cand.begin(), cand.end(), std::int32_t(rl))) return true;
        }
    }
    return false;
}

std::vector<std::int32_t> kesten_backbone(const RootedCluster& cluster, int m,
                                          BackboneEngine engine) {
    if (m < 1) throw std::invalid_argument("kesten_backbone: m must be >= 1");
    std::vector<std::int32_t> out;
    if (cluster.local_of(Vertex{0, 0}) < 0) return out;

    // everything happens in the configuration restricted to S(m): witness
    // paths may not leave the box and re-enter
    const Rect box{-m, -m, m, m};
    LocalGraph g = induced_subgraph(cluster, box, nullptr);

    int origin = -1;
    std::vector<std::uint8_t> btargets(std::size_t(g.nv), 0);
    bool any_boundary = false;
    for (int i = 0; i < g.nv; ++i) {
        Vertex v = cluster.vertex(g.back[std::size_t(i)]);
        if (v == Vertex{0, 0}) origin = i;
        if (std::abs(v.x) == m || std::abs(v.y) == m) {
            btargets[std::size_t(i)] = 1;
            any_boundary = true;
        }
    }
    if (!any_boundary || origin < 0) return out;

    if (engine == BackboneEngine::Flow) {
        std::vector<std::uint8_t> origin_mask(std::size_t(g.nv), 0);
        origin_mask[std::size_t(origin)] = 1;
        for (int i = 0; i < g.nv; ++i) {
            if (disjoint_paths_to_both(g, i, btargets, origin_mask))
                out.push_back(g.back[std::size_t(i)]);
        }
        return out;
    }

    // Blocks engine: vertices on a simple path from the virtual boundary node
    // to the origin = blocks along the block-cut tree path between them.
    const int t = g.nv;
    LocalGraph h = with_virtual_node(g, btargets);
    auto blocks = biconnected_blocks(h);
    // block-cut tree: nodes = blocks then vertices; edges block <-> member
    // vertices that are articulation points or our two endpoints
    int nb = int(blocks.size());
    std::vector<std::vector<std::int32_t>> blocks_of_vertex(std::size_t(h.nv));
    for (int b = 0; b < nb; ++b)
        for (std::int32_t v : blocks[std::size_t(b)]) blocks_of_vertex[std::size_t(v)].push_back(b);

    // BFS over the bipartite incidence (block nodes 0..nb-1, vertex nodes
    // nb..nb+h.nv-1) from origin's side to t's side
    const int norigin = nb + origin, ntarget = nb + t;
    std::vector<std::int32_t> par(std::size_t(nb + h.nv), -2);
    std::vector<std::int32_t> bfs{norigin};
    par[std::size_t(norigin)] = -1;
    for (std::size_t qh = 0; qh < bfs.size(); ++qh) {
        int u = bfs[qh];
        if (u == ntarget) break;
        if (u >= nb) {
            for (std::int32_t b : blocks_of_vertex[std::size_t(u - nb)]) {
                if (par[std::size_t(b)] == -2) {
                    par[std::size_t(b)] = u;
                    bfs.push_back(b);
                }
            }
        } else {
            for (std::int32_t v : blocks[std::size_t(u)]) {
                if (par[std::size_t(nb + v)] == -2) {
                    par[std::size_t(nb + v)] = u;
                    bfs.push_back(nb + v);
                }
            }
        }
    }
    if (par[std::size_t(ntarget)] == -2) return out;  // origin not connected to ∂S(m)

    std::vector<std::uint8_t> member(std::size_t(g.nv), 0);
    member[std::size_t(origin)] = 1;
    for (int u = par[std::size_t(ntarget)]; u >= 0; u = par[std::size_t(u)]) {
        if (u < nb) {
            for (std::int32_t v : blocks[std::size_t(u)])
                if (v != t) member[std::size_t(v)] = 1;
        }
    }
    for (int i = 0; i < g.nv; ++i)
        if (member[std::size_t(i)]) out.push_back(g.back[std::size_t(i)]);
    return out;
}

std::int64_t cluster_volume_in_rect(const RootedCluster& cluster, const Rect& rect) {
    Rect inner = clamp_to_region(rect, cluster.region);
    if (inner.empty()) return 0;
    std::int64_t count = 0;
    for (int y = inner.ymin; y <= inner.ymax; ++y)
        for (int x = inner.xmin; x <= inner.xmax; ++x)
            if (cluster.local_of(Vertex{x, y}) >= 0) ++count;
    return count;
}

}  // namespace iiclab
