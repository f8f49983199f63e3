#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "iiclab/config.hpp"
#include "iiclab/connectivity.hpp"
#include "iiclab/stats.hpp"

namespace iiclab {

inline constexpr const char* kVersionTag = "iiclab 0.1.0";

// Seed derivation along a label path: folds derive_seed(master, label) left
// to right, so ["a","b"] and ["b","a"] land in different streams.
std::uint64_t derive_seed_path(std::uint64_t master, std::span<const std::string> path);

// Fits eta1 from (n, pi1) and eta21 from (n, pi2/pi1) in log-log, filling the
// exponent fields of `stats` in place. Cells with a zero probability are
// skipped; valid only when both fits retain >= 4 cells.
struct ArmExponentFits {
    LogLogFit pi1_fit;    // slope = -eta1
    LogLogFit ratio_fit;  // slope = -eta21
    bool valid = false;
};
ArmExponentFits fit_arm_exponents(ArmStats& stats, std::uint64_t seed = 0);

struct ManifestFile {
    std::string path;  // relative to the run directory
    std::string fnv64;
    std::uint64_t bytes = 0;
};

struct ManifestTask {
    std::string key;
    std::string status;  // "done" or "failed: <reason>"
    std::vector<std::string> outputs;
    double seconds = 0.0;
};

struct RunManifest {
    std::string version;
    std::string config_hash;
    std::vector<ManifestTask> tasks;
    std::vector<ManifestFile> files;
    double wall_seconds = 0.0;
    int tasks_total = 0;
    int tasks_done = 0;
    int tasks_failed = 0;
};

RunManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const RunManifest& m, const std::filesystem::path& path);

struct RunOptions {
    int max_tasks = -1;  // stop after this many executed (not skipped) tasks; < 0 = no limit
    bool log = true;     // progress lines on stderr
};

// Executes the config's task list into its output directory, skipping tasks
// whose manifest entry is done and whose outputs still match their recorded
// checksums; the manifest is rewritten after every task so an interrupted run
// resumes where it stopped. Throws std::runtime_error listing the failed task
// keys if any task failed (after recording them in the manifest).
RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace iiclab
