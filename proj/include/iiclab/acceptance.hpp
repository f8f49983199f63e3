#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iiclab/config.hpp"
#include "json.hpp"

namespace iiclab::acceptance {

// One release-gate criterion. `hard` marks criteria whose failure fails the
// gate; the soft ones (the arm-exponent band) are reported only.
struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    bool hard = true;
    std::string detail;
    double seconds = 0.0;
};

// Every sample size and grid the criteria run at. Defaults are the release
// scales; desk_scales() shrinks them onto a config's budgets so the full
// pipeline stays cheap enough for smoke runs.
struct Scales {
    std::uint64_t seed = 20260815;

    // covering exactness
    int cov_kmax = 10;
    int cov_shifts = 100;
    int cov_window = 256;
    std::int64_t cov_witnesses = 100;  // per (k, shift) pair

    // backbone oracle equivalence
    int oracle_seeded = 200;

    // arm inequalities / exponents
    std::vector<int> arm_grid = {8, 16, 32, 64, 128};
    std::int64_t arm_trials = 100000;

    // thin-backbone decay
    int bb_n = 256;
    std::int64_t bb_samples = 2000;
    int bb_kmin = 3, bb_kmax = 7;
    double epsilon = 0.25;

    // markov-type quadratic form
    int mk_chains = 50;
    int mk_max_states = 100;

    // diffusive baseline
    int diff_n = 128;
    int diff_clusters = 8;
    int diff_walks = 125;
    std::vector<std::int64_t> diff_t_grid = {64, 128, 256, 512, 1024, 2048, 4096};
    std::vector<int> diff_r_grid = {2, 3, 4, 6, 8, 12, 16};

    // subdiffusive escape
    int sub_n = 256;
    int sub_clusters = 500;
    int sub_walks = 4;
    std::vector<std::int64_t> sub_t_grid = {64,   128,  256,  512,  1024,
                                            2048, 4096, 8192, 16384};
    std::vector<int> sub_r_grid = {2, 3, 4, 6, 8, 12, 16, 24};

    // weighted-metric lower bound
    int dist_n = 256;
    int dist_clusters = 40;
    std::size_t dist_pairs = 10000;
    int dist_jmax = 6;
    int dist_floor = 8;

    // volume tail
    int tail_q = 32;
    std::int64_t tail_samples = 10000;
};

Scales desk_scales(const ExperimentConfig& cfg);

// Runs one criterion (1..10) standalone. Statistical failure is reported in
// the result, not thrown; genuine computation failure (e.g. a fit with too
// few points) propagates as an exception.
CriterionResult run_one(int id, const Scales& s);

// Runs all ten in order, sharing the arm-probability runs between the
// criteria that need them. With log=true prints one line per criterion.
std::vector<CriterionResult> run_all(const Scales& s, bool log);

nlohmann::json result_json(const CriterionResult& r);
nlohmann::json report_json(const std::vector<CriterionResult>& results);

}  // namespace iiclab::acceptance
