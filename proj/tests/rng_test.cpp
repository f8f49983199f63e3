#include "iiclab/rng.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"

using namespace iiclab;

namespace {

// Independent reference: the textbook sequential splitmix64 generator
// (state walk + finalize per call), written without touching the library's
// counter formulation.
struct SequentialSplitMix {
    std::uint64_t state;
    explicit SequentialSplitMix(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
};

}  // namespace

TEST_CASE("edge_raw equals the sequential splitmix64 stream") {
    for (std::uint64_t seed : {0ull, 1ull, 0x123456789ABCDEFull, 0xFFFFFFFFFFFFFFFFull}) {
        SequentialSplitMix ref(seed);
        for (std::uint64_t i = 0; i < 1000; ++i) {
            CAPTURE(seed);
            CAPTURE(i);
            REQUIRE(edge_raw(seed, i) == ref.next());
        }
    }
}

TEST_CASE("edge_raw matches frozen reference vectors") {
    // first outputs of splitmix64 from seed 0 (published test vectors)
    CHECK(edge_raw(0, 0) == 0xE220A8397B1DCDAFull);
    CHECK(edge_raw(0, 1) == 0x6E789E6AA1B965F4ull);
    CHECK(edge_raw(0, 2) == 0x06C45D188009454Full);
    CHECK(edge_raw(0, 3) == 0xF88BB8A8724C81ECull);
    CHECK(edge_raw(0, 4) == 0x1B39896A51A8749Bull);
    CHECK(edge_raw(0x123456789ABCDEFull, 0) == 0x157A3807A48FAA9Dull);
    CHECK(edge_raw(0x123456789ABCDEFull, 1) == 0xD573529B34A1D093ull);
    CHECK(edge_raw(0x123456789ABCDEFull, 2) == 0x2F90B72E996DCCBEull);
}

TEST_CASE("to_unit_interval stays in [0,1) and is monotone in the mantissa") {
    CHECK(to_unit_interval(0) == 0.0);
    CHECK(to_unit_interval(0xFFFFFFFFFFFFFFFFull) < 1.0);
    CHECK(to_unit_interval(0xFFFFFFFFFFFFFFFFull) == doctest::Approx(1.0).epsilon(1e-15));
    // low 11 bits are discarded
    CHECK(to_unit_interval(0x7FF) == 0.0);
    CHECK(to_unit_interval(1ull << 11) == 0x1.0p-53);
}

TEST_CASE("p_threshold endpoints and dyadic exactness") {
    CHECK(p_threshold(0.0) == 0);
    CHECK(p_threshold(-1.0) == 0);
    CHECK(p_threshold(1.0) == (1ull << 53));
    CHECK(p_threshold(2.0) == (1ull << 53));
    CHECK(p_threshold(0.5) == (1ull << 52));
    CHECK(p_threshold(0.25) == (1ull << 51));
    // exactly representable k / 2^53 thresholds
    for (std::uint64_t k : {1ull, 2ull, 12345ull, (1ull << 53) - 1}) {
        double p = double(k) * 0x1.0p-53;
        CHECK(p_threshold(p) == k);
    }
}

TEST_CASE("integer open test agrees with the double comparison") {
    const double ps[] = {0.0, 1e-9, 0.1, 0.25, 1.0 / 3.0, 0.5, 0.6180339887, 2.0 / 3.0,
                         0.75, 0.9, 1.0 - 1e-12, 1.0};
    for (double p : ps) {
        std::uint64_t thr = p_threshold(p);
        for (std::uint64_t i = 0; i < 20000; ++i) {
            std::uint64_t r = edge_raw(0xC0FFEEull, i);
            bool by_int = (r >> 11) < thr;
            bool by_double = to_unit_interval(r) < p;
            CAPTURE(p);
            CAPTURE(i);
            REQUIRE(by_int == by_double);
            REQUIRE(edge_open(0xC0FFEEull, i, thr) == by_int);
        }
    }
}

TEST_CASE("edge openness is monotone in p on a shared seed") {
    std::uint64_t t1 = p_threshold(0.3), t2 = p_threshold(0.7);
    for (std::uint64_t i = 0; i < 50000; ++i) {
        if (edge_open(42, i, t1)) REQUIRE(edge_open(42, i, t2));
    }
}

TEST_CASE("derive_seed separates labels, indices and nesting order") {
    std::uint64_t m = 0xDEADBEEFull;
    CHECK(derive_seed(m, "attempt") != derive_seed(m, "trial"));
    CHECK(derive_seed(m, "attempt", 0) != derive_seed(m, "attempt", 1));
    CHECK(derive_seed(m, std::uint64_t(7)) != derive_seed(m, std::uint64_t(8)));
    CHECK(derive_seed(m, "a", 1) == derive_seed(derive_seed(m, "a"), std::uint64_t(1)));
    CHECK(derive_seed(derive_seed(m, "a"), "b") != derive_seed(derive_seed(m, "b"), "a"));
    // deterministic across calls
    CHECK(derive_seed(m, "walk", 3) == derive_seed(m, "walk", 3));
    // distinct masters stay distinct
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 4096; ++s) seen.insert(derive_seed(s, "x", 0));
    CHECK(seen.size() == 4096);
}

TEST_CASE("xoshiro bounded draws are in range and reproducible") {
    Xoshiro256pp a(987654321), b(987654321), c(987654322);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 10000; ++i) {
        std::uint64_t av = a.next(), bv = b.next(), cv = c.next();
        all_equal = all_equal && (av == bv);
        any_diff = any_diff || (av != cv);
    }
    CHECK(all_equal);
    CHECK(any_diff);

    Xoshiro256pp r(5);
    for (std::uint64_t bound : {1ull, 2ull, 3ull, 10ull, 1000ull, 1ull << 40}) {
        for (int i = 0; i < 2000; ++i) REQUIRE(r.bounded(bound) < bound);
    }
    // bounded(k) hits every residue for small k
    Xoshiro256pp h(6);
    std::set<std::uint64_t> hits;
    for (int i = 0; i < 200; ++i) hits.insert(h.bounded(4));
    CHECK(hits.size() == 4);
}

TEST_CASE("xoshiro uniform01 and normal produce sane values") {
    Xoshiro256pp r(31337);
    double sum = 0.0, sumsq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.05));

    double nsum = 0.0, nsumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = r.normal();
        REQUIRE(std::isfinite(z));
        nsum += z;
        nsumsq += z * z;
    }
    CHECK(nsum / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(nsumsq / n == doctest::Approx(1.0).epsilon(0.03));
}
