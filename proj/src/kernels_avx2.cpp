// AVX2 variant of the bond-configuration sampler. Four counter lanes run the
// splitmix64 finalizer in parallel; the open/closed compare drops out of the
// lane sign bits via movemask. This TU is the only one built with -mavx2 and
// is reached only behind the runtime CPU check in kernels_dispatch.cpp.
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "iiclab/kernels.hpp"
#include "iiclab/rng.hpp"

namespace iiclab::kernels::detail {

namespace {

// 64x64 -> low 64 multiply by constant, composed from 32x32->64 products
// (AVX2 has no _mm256_mullo_epi64).
template <std::uint64_t C>
inline __m256i mullo64_const(__m256i a) {
    const __m256i c_full = _mm256_set1_epi64x(std::int64_t(C));
    const __m256i c_hi = _mm256_set1_epi64x(std::int64_t(C >> 32));
    __m256i lo = _mm256_mul_epu32(a, c_full);                          // a_lo * c_lo
    __m256i t1 = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), c_full);   // a_hi * c_lo
    __m256i t2 = _mm256_mul_epu32(a, c_hi);                            // a_lo * c_hi
    __m256i cross = _mm256_slli_epi64(_mm256_add_epi64(t1, t2), 32);
    return _mm256_add_epi64(lo, cross);
}

inline __m256i finalize4(__m256i z) {
    z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 30));
    z = mullo64_const<0xBF58476D1CE4E5B9ull>(z);
    z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 27));
    z = mullo64_const<0x94D049BB133111EBull>(z);
    return _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
}

}  // namespace

void fill_open_edges_avx2(std::uint64_t* words, std::uint64_t nedges, std::uint64_t seed,
                          std::uint64_t threshold) {
    const std::uint64_t nwords = (nedges + 63) / 64;
    const std::uint64_t full_words = nedges / 64;
    const __m256i step = _mm256_set1_epi64x(std::int64_t(4 * kSplitMixGamma));
    const __m256i thr = _mm256_set1_epi64x(std::int64_t(threshold));

    // counter lanes for edges e..e+3: seed + (e+1..e+4)*GAMMA
    __m256i ctr = _mm256_add_epi64(
        _mm256_set1_epi64x(std::int64_t(seed)),
        _mm256_set_epi64x(std::int64_t(4 * kSplitMixGamma), std::int64_t(3 * kSplitMixGamma),
                          std::int64_t(2 * kSplitMixGamma), std::int64_t(1 * kSplitMixGamma)));

    for (std::uint64_t w = 0; w < full_words; ++w) {
        std::uint64_t bits = 0;
        for (int v = 0; v < 16; ++v) {
            __m256i z = finalize4(ctr);
            ctr = _mm256_add_epi64(ctr, step);
            __m256i m = _mm256_srli_epi64(z, 11);
            // both sides < 2^53 so the signed compare is safe
            __m256i open = _mm256_cmpgt_epi64(thr, m);
            std::uint64_t mask = std::uint64_t(_mm256_movemask_pd(_mm256_castsi256_pd(open)));
            bits |= mask << (4 * v);
        }
        words[w] = bits;
    }

    if (full_words < nwords) {
        fill_open_edges_scalar(words + full_words, nedges - full_words * 64,
                               seed + full_words * 64 * kSplitMixGamma, threshold);
    }
}

void fill_edge_uniforms_avx2(double* out, std::uint64_t begin, std::uint64_t count,
                             std::uint64_t seed) {
    const __m256i step = _mm256_set1_epi64x(std::int64_t(4 * kSplitMixGamma));
    __m256i ctr = _mm256_add_epi64(
        _mm256_set1_epi64x(std::int64_t(seed + begin * kSplitMixGamma)),
        _mm256_set_epi64x(std::int64_t(4 * kSplitMixGamma), std::int64_t(3 * kSplitMixGamma),
                          std::int64_t(2 * kSplitMixGamma), std::int64_t(1 * kSplitMixGamma)));

    std::uint64_t i = 0;
    const double scale = 0x1.0p-53;
    for (; i + 4 <= count; i += 4) {
        __m256i z = finalize4(ctr);
        ctr = _mm256_add_epi64(ctr, step);
        __m256i m = _mm256_srli_epi64(z, 11);
        // int64 -> double: lanes are < 2^53 so the cast is exact
        alignas(32) std::uint64_t lanes[4];
        _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), m);
        out[i + 0] = double(lanes[0]) * scale;
        out[i + 1] = double(lanes[1]) * scale;
        out[i + 2] = double(lanes[2]) * scale;
        out[i + 3] = double(lanes[3]) * scale;
    }
    for (; i < count; ++i) out[i] = edge_uniform(seed, begin + i);
}

}  // namespace iiclab::kernels::detail

#endif  // x86_64
