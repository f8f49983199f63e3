#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iiclab/percolation.hpp"

namespace iiclab {

enum class ExperimentKind { Arms, Backbone, Walk, Weights, MarkovType, FullPipeline };

const char* kind_name(ExperimentKind k);
ExperimentKind kind_from(const std::string& name);

// One experiment = one config file. Unused fields are ignored by kinds that
// do not need them but still validated, so a config stays loadable when its
// kind changes.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Arms;

    // model
    int n = 64;
    double p = 0.5;
    IicFlavor flavor = IicFlavor::Conditioned;

    // scale parameters
    int k_min = 3;
    int k_max = 6;
    double epsilon = 0.25;   // deep-depth threshold as a fraction of patch side
    double c4 = 1.0;         // large-patch volume constant
    double d_prime = 1.75;   // large-patch volume exponent, < 2
    std::string weight_mode = "mixture";  // unit | scale | mixture | hybrid

    // budgets
    std::int64_t trials = 1000;
    std::int64_t clusters = 8;
    std::int64_t walks = 4;
    std::vector<int> n_grid = {8, 16, 32};
    std::vector<std::int64_t> t_grid = {8, 16, 32, 64, 128, 256};
    std::vector<int> r_grid = {2, 4, 8, 16};
    std::int64_t pairs = 1000;  // weighted-vs-chemical distance pairs to sample
    int dist_floor = 8;
    double delta = 0.05;

    // plumbing
    std::uint64_t seed = 0;
    std::string out_dir;  // empty: $IICLAB_OUT_DIR, then "iiclab-out"

    bool operator==(const ExperimentConfig&) const = default;
};

// Strict JSON object parse: unknown keys are an error (a typo must not
// silently fall back to a default). Missing keys take the defaults above.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical serialization (sorted keys, stable float formatting);
// parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

// Throws std::invalid_argument on the first violated constraint: positive
// budgets, sorted grids, epsilon in (0, 1/2], d' < 2, p in [0,1], n >= 4.
void validate_config(const ExperimentConfig& cfg);

std::uint64_t config_hash(const ExperimentConfig& cfg);

// output directory resolution: config value, else $IICLAB_OUT_DIR, else
// "iiclab-out"
std::string resolve_out_dir(const ExperimentConfig& cfg);

}  // namespace iiclab
