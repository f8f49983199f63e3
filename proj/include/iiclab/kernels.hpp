#pragma once

#include <cstdint>

namespace iiclab::kernels {

// The bond-configuration sampler is the one data-parallel hot loop in this
// project: evaluate the per-edge uniform stream and pack open/closed bits.
// A scalar reference kernel and an AVX2 variant are selected at runtime and
// must produce bit-identical output (equivalence-tested).
enum class Isa { Auto, Scalar, Avx2 };

const char* isa_name(Isa isa);
bool avx2_available();
// Auto resolution: IICLAB_ISA env override ("scalar"/"avx2") if set and
// usable, else the best ISA the CPU supports.
Isa resolve_isa(Isa requested);

// Packs bit e (0-based, little-endian within 64-bit words) = 1 iff
// (edge_raw(seed, e) >> 11) < p_threshold(p), for e in [0, nedges).
// Trailing bits of the last word are zero.
void fill_open_edges(std::uint64_t* words, std::uint64_t nedges, std::uint64_t seed, double p,
                     Isa isa = Isa::Auto);

// Bulk uniforms for edge ids [begin, begin+count): coupling diagnostics/tests.
void fill_edge_uniforms(double* out, std::uint64_t begin, std::uint64_t count, std::uint64_t seed,
                        Isa isa = Isa::Auto);

std::uint64_t count_open(const std::uint64_t* words, std::uint64_t nedges);

namespace detail {
void fill_open_edges_scalar(std::uint64_t* words, std::uint64_t nedges, std::uint64_t seed,
                            std::uint64_t threshold);
void fill_edge_uniforms_scalar(double* out, std::uint64_t begin, std::uint64_t count,
                               std::uint64_t seed);
#if defined(__x86_64__) || defined(_M_X64)
void fill_open_edges_avx2(std::uint64_t* words, std::uint64_t nedges, std::uint64_t seed,
                          std::uint64_t threshold);
void fill_edge_uniforms_avx2(double* out, std::uint64_t begin, std::uint64_t count,
                             std::uint64_t seed);
#endif
}  // namespace detail

}  // namespace iiclab::kernels
