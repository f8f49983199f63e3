#include "iiclab/kernels.hpp"
#include "iiclab/rng.hpp"

namespace iiclab::kernels::detail {

void fill_open_edges_scalar(std::uint64_t* words, std::uint64_t nedges, std::uint64_t seed,
                            std::uint64_t threshold) {
    std::uint64_t nwords = (nedges + 63) / 64;
    for (std::uint64_t w = 0; w < nwords; ++w) {
        std::uint64_t bits = 0;
        std::uint64_t base = w * 64;
        std::uint64_t lim = nedges - base < 64 ? nedges - base : 64;
        for (std::uint64_t b = 0; b < lim; ++b) {
            if ((edge_raw(seed, base + b) >> 11) < threshold) bits |= 1ull << b;
        }
        words[w] = bits;
    }
}

void fill_edge_uniforms_scalar(double* out, std::uint64_t begin, std::uint64_t count,
                               std::uint64_t seed) {
    for (std::uint64_t i = 0; i < count; ++i) out[i] = edge_uniform(seed, begin + i);
}

}  // namespace iiclab::kernels::detail
