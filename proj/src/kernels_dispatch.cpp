#include <bit>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "iiclab/kernels.hpp"
#include "iiclab/rng.hpp"

namespace iiclab::kernels {

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::Auto: return "auto";
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "?";
}

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Isa resolve_isa(Isa requested) {
    if (requested != Isa::Auto) {
        if (requested == Isa::Avx2 && !avx2_available())
            throw std::runtime_error("kernels: avx2 requested but not supported by this CPU");
        return requested;
    }
    if (const char* env = std::getenv("IICLAB_ISA")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2_available()) return Isa::Avx2;
    }
    return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

void fill_open_edges(std::uint64_t* words, std::uint64_t nedges, std::uint64_t seed, double p,
                     Isa isa) {
    const std::uint64_t threshold = p_threshold(p);
    switch (resolve_isa(isa)) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::Avx2:
            detail::fill_open_edges_avx2(words, nedges, seed, threshold);
            return;
#endif
        default:
            detail::fill_open_edges_scalar(words, nedges, seed, threshold);
            return;
    }
}

void fill_edge_uniforms(double* out, std::uint64_t begin, std::uint64_t count, std::uint64_t seed,
                        Isa isa) {
    switch (resolve_isa(isa)) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::Avx2:
            detail::fill_edge_uniforms_avx2(out, begin, count, seed);
            return;
#endif
        default:
            detail::fill_edge_uniforms_scalar(out, begin, count, seed);
            return;
    }
}

std::uint64_t count_open(const std::uint64_t* words, std::uint64_t nedges) {
    std::uint64_t total = 0;
    const std::uint64_t full = nedges / 64;
    for (std::uint64_t w = 0; w < full; ++w) total += std::uint64_t(std::popcount(words[w]));
    if (std::uint64_t rem = nedges % 64)
        total += std::uint64_t(std::popcount(words[full] & ((1ull << rem) - 1)));
    return total;
}

}  // namespace iiclab::kernels
