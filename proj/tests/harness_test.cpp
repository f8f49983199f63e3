#include "iiclab/harness.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "iiclab/io.hpp"
#include "iiclab/rng.hpp"

using namespace iiclab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* tag) {
    fs::path d = fs::temp_directory_path() /
                 ("iiclab-harness-" + std::string(tag) + "-" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

ExperimentConfig small_arms_config(const fs::path& dir) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Arms;
    cfg.n_grid = {8, 16, 32};
    cfg.trials = 2000;
    cfg.seed = 424242;
    cfg.out_dir = dir.string();
    return cfg;
}

std::uint64_t file_fnv(const fs::path& p) {
    REQUIRE(fs::exists(p));
    return fnv1a_file(p);
}

// every run artifact except the manifest (timings) and config.json (out_dir)
std::vector<std::string> artifact_names(const fs::path& dir) {
    std::vector<std::string> names;
    for (auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string rel = fs::relative(e.path(), dir).string();
        if (rel != "manifest.json" && rel != "config.json") names.push_back(rel);
    }
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

TEST_CASE("seed paths chain one label at a time") {
    std::vector<std::string> ab = {"a", "b"};
    std::vector<std::string> ba = {"b", "a"};
    std::vector<std::string> a = {"a"};
    CHECK(derive_seed_path(7, a) == derive_seed(7, "a"));
    CHECK(derive_seed_path(7, ab) == derive_seed(derive_seed(7, "a"), "b"));
    CHECK(derive_seed_path(7, ab) != derive_seed_path(7, ba));
    CHECK(derive_seed_path(7, ab) != derive_seed_path(8, ab));
    CHECK_THROWS_AS(derive_seed_path(7, {}), std::invalid_argument);

    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::string> p = {"trial", std::to_string(i)};
        seen.insert(derive_seed_path(123, p));
    }
    CHECK(seen.size() == 1000);
}

TEST_CASE("arm exponent fit recovers a planted power law") {
    ArmStats stats;
    const std::int64_t trials = 100000000;
    for (int n : {8, 16, 32, 64, 128, 256}) {
        ArmCell c;
        c.n = n;
        c.trials = trials;
        c.one_arm_hits = std::int64_t(std::llround(double(trials) * std::pow(n, -0.104)));
        // pi2 = pi1 * n^-0.2
        c.two_arm_hits =
            std::int64_t(std::llround(double(c.one_arm_hits) * std::pow(n, -0.2)));
        stats.cells.push_back(c);
    }
    ArmExponentFits fits = fit_arm_exponents(stats, 55);
    CHECK(fits.valid);
    CHECK(stats.fit_valid);
    CHECK(stats.eta1_hat == doctest::Approx(0.104).epsilon(0.01));
    CHECK(stats.eta21_hat == doctest::Approx(0.2).epsilon(0.01));
    CHECK(fits.pi1_fit.slope == doctest::Approx(-stats.eta1_hat));

    ArmStats few;
    few.cells.assign(stats.cells.begin(), stats.cells.begin() + 3);
    CHECK_FALSE(fit_arm_exponents(few, 55).valid);
    CHECK_FALSE(few.fit_valid);
}

TEST_CASE("manifest json round trip") {
    RunManifest m;
    m.version = "test-1";
    m.config_hash = "00ff";
    m.wall_seconds = 1.5;
    m.tasks_total = 2;
    m.tasks_done = 1;
    m.tasks_failed = 1;
    m.tasks.push_back({"one", "done", {"a.csv", "cells/b.json"}, 0.25});
    m.tasks.push_back({"two", "failed: boom", {}, 0.5});
    m.files.push_back({"a.csv", "deadbeefdeadbeef", 123});

    fs::path dir = fresh_dir("manifest");
    save_manifest(m, dir / "manifest.json");
    RunManifest r = load_manifest(dir / "manifest.json");
    CHECK(r.version == m.version);
    CHECK(r.config_hash == m.config_hash);
    CHECK(r.wall_seconds == doctest::Approx(m.wall_seconds));
    CHECK(r.tasks_total == 2);
    CHECK(r.tasks_done == 1);
    CHECK(r.tasks_failed == 1);
    REQUIRE(r.tasks.size() == 2);
    CHECK(r.tasks[0].key == "one");
    CHECK(r.tasks[0].outputs == m.tasks[0].outputs);
    CHECK(r.tasks[1].status == "failed: boom");
    REQUIRE(r.files.size() == 1);
    CHECK(r.files[0].fnv64 == "deadbeefdeadbeef");
    CHECK(r.files[0].bytes == 123);

    atomic_write_text(dir / "manifest.json", "{broken");
    CHECK_THROWS_AS(load_manifest(dir / "manifest.json"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("arms experiment produces its artifacts and reruns are no-ops") {
    fs::path dir = fresh_dir("arms");
    ExperimentConfig cfg = small_arms_config(dir);
    RunManifest man = run_experiment(cfg, {-1, false});
    CHECK(man.tasks_total == 4);  // three radii + aggregate
    CHECK(man.tasks_done == 4);
    CHECK(man.tasks_failed == 0);

    CHECK(fs::exists(dir / "config.json"));
    CHECK(fs::exists(dir / "arms_fit.json"));
    for (int n : {8, 16, 32})
        CHECK(fs::exists(dir / ("cells/arms_n" + std::to_string(n) + ".json")));

    std::string csv_text;
    {
        std::uint64_t before = file_fnv(dir / "arms.csv");
        RunManifest again = run_experiment(cfg, {-1, false});
        CHECK(again.tasks_done == 4);
        CHECK(file_fnv(dir / "arms.csv") == before);
    }
    fs::remove_all(dir);
}

TEST_CASE("interrupted run resumes to the same bytes") {
    fs::path dir_a = fresh_dir("resume-a");
    fs::path dir_b = fresh_dir("resume-b");
    ExperimentConfig cfg_a = small_arms_config(dir_a);
    ExperimentConfig cfg_b = small_arms_config(dir_b);

    // a: stop after one task, then resume step by step
    run_experiment(cfg_a, {1, false});
    RunManifest partial = load_manifest(dir_a / "manifest.json");
    CHECK(partial.tasks_done == 1);
    CHECK(partial.tasks_done < partial.tasks_total);
    run_experiment(cfg_a, {2, false});
    run_experiment(cfg_a, {-1, false});

    // b: straight through
    run_experiment(cfg_b, {-1, false});

    auto names_a = artifact_names(dir_a);
    CHECK(names_a == artifact_names(dir_b));
    for (const std::string& rel : names_a) CHECK(file_fnv(dir_a / rel) == file_fnv(dir_b / rel));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("stale outputs are rebuilt") {
    fs::path dir = fresh_dir("stale");
    ExperimentConfig cfg = small_arms_config(dir);
    run_experiment(cfg, {-1, false});
    std::uint64_t good = file_fnv(dir / "arms.csv");
    atomic_write_text(dir / "arms.csv", "tampered\n");
    run_experiment(cfg, {-1, false});
    CHECK(file_fnv(dir / "arms.csv") == good);
    fs::remove_all(dir);
}

TEST_CASE("output directory is bound to one config") {
    fs::path dir = fresh_dir("hash");
    ExperimentConfig cfg = small_arms_config(dir);
    run_experiment(cfg, {-1, false});
    ExperimentConfig other = cfg;
    other.trials = 999;
    CHECK_THROWS_WITH_AS(run_experiment(other, {-1, false}),
                         doctest::Contains("different config"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("failing task is recorded and reported") {
    fs::path dir = fresh_dir("fail");
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Walk;
    cfg.flavor = IicFlavor::Conditioned;
    cfg.n = 8;
    cfg.clusters = 2;
    cfg.walks = 2;
    cfg.t_grid = {2, 4, 8};  // too short for the escape fit: walk-fit must fail
    cfg.r_grid = {2};
    cfg.seed = 5;
    cfg.out_dir = dir.string();
    CHECK_THROWS_WITH_AS(run_experiment(cfg, {-1, false}),
                         doctest::Contains("experiment tasks failed"), std::runtime_error);
    RunManifest man = load_manifest(dir / "manifest.json");
    CHECK(man.tasks_failed == 1);
    CHECK(fs::exists(dir / "walk.csv"));  // the ensemble task before it succeeded
    bool saw_failed = false;
    for (const ManifestTask& t : man.tasks)
        if (t.key == "walk-fit") {
            saw_failed = t.status.rfind("failed:", 0) == 0;
        }
    CHECK(saw_failed);
    fs::remove_all(dir);
}
