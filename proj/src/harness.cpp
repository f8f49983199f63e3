#include "iiclab/harness.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <stdexcept>

#include "iiclab/acceptance.hpp"
#include "iiclab/io.hpp"
#include "iiclab/metrics.hpp"
#include "iiclab/walk.hpp"
#include "json.hpp"

namespace iiclab {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_seed_path(std::uint64_t master, std::span<const std::string> path) {
    if (path.empty()) throw std::invalid_argument("derive_seed_path: empty path");
    std::uint64_t s = master;
    for (const std::string& label : path) s = derive_seed(s, label);
    return s;
}

ArmExponentFits fit_arm_exponents(ArmStats& stats, std::uint64_t seed) {
    ArmExponentFits out;
    std::vector<FitPoint> p1, ratio;
    for (const ArmCell& c : stats.cells) {
        if (c.pi1() > 0.0) p1.push_back({double(c.n), c.pi1(), c.pi1_se()});
        if (c.pi1() > 0.0 && c.pi2() > 0.0) {
            double r = c.pi2() / c.pi1();
            double rel1 = c.pi1_se() / c.pi1(), rel2 = c.pi2_se() / c.pi2();
            ratio.push_back({double(c.n), r, r * std::sqrt(rel1 * rel1 + rel2 * rel2)});
        }
    }
    if (p1.size() < 4 || ratio.size() < 4) {
        stats.fit_valid = false;
        return out;
    }
    FitLogLogOptions fo;
    fo.seed = derive_seed(seed, "eta1");
    out.pi1_fit = fit_loglog(p1, fo);
    fo.seed = derive_seed(seed, "eta21");
    out.ratio_fit = fit_loglog(ratio, fo);
    out.valid = true;
    stats.eta1_hat = -out.pi1_fit.slope;
    stats.eta1_se = out.pi1_fit.slope_se;
    stats.eta21_hat = -out.ratio_fit.slope;
    stats.eta21_se = out.ratio_fit.slope_se;
    stats.fit_valid = true;
    return out;
}

// ---- manifest ----

namespace {

json manifest_to_json(const RunManifest& m) {
    json j;
    j["version"] = m.version;
    j["config_hash"] = m.config_hash;
    j["wall_seconds"] = m.wall_seconds;
    j["tasks_total"] = m.tasks_total;
    j["tasks_done"] = m.tasks_done;
    j["tasks_failed"] = m.tasks_failed;
    json tasks = json::array();
    for (const ManifestTask& t : m.tasks) {
        json tj;
        tj["key"] = t.key;
        tj["status"] = t.status;
        tj["outputs"] = t.outputs;
        tj["seconds"] = t.seconds;
        tasks.push_back(tj);
    }
    j["tasks"] = tasks;
    json files = json::array();
    for (const ManifestFile& f : m.files) {
        json fj;
        fj["path"] = f.path;
        fj["fnv64"] = f.fnv64;
        fj["bytes"] = f.bytes;
        files.push_back(fj);
    }
    j["files"] = files;
    return j;
}

}  // namespace

RunManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("manifest parse error: " + std::string(e.what()));
    }
    RunManifest m;
    try {
        m.version = j.at("version").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.wall_seconds = j.at("wall_seconds").get<double>();
        m.tasks_total = j.at("tasks_total").get<int>();
        m.tasks_done = j.at("tasks_done").get<int>();
        m.tasks_failed = j.at("tasks_failed").get<int>();
        for (const json& tj : j.at("tasks")) {
            ManifestTask t;
            t.key = tj.at("key").get<std::string>();
            t.status = tj.at("status").get<std::string>();
            t.outputs = tj.at("outputs").get<std::vector<std::string>>();
            t.seconds = tj.at("seconds").get<double>();
            m.tasks.push_back(std::move(t));
        }
        for (const json& fj : j.at("files")) {
            ManifestFile f;
            f.path = fj.at("path").get<std::string>();
            f.fnv64 = fj.at("fnv64").get<std::string>();
            f.bytes = fj.at("bytes").get<std::uint64_t>();
            m.files.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("manifest field error: " + std::string(e.what()));
    }
    return m;
}

void save_manifest(const RunManifest& m, const fs::path& path) {
    atomic_write_text(path, manifest_to_json(m).dump(2) + "\n");
}

// ---- experiment tasks ----

namespace {

struct Task {
    std::string key;
    std::function<std::vector<std::string>()> run;  // returns run-dir-relative outputs
};

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    json j;
    in >> j;
    return j;
}

void write_json_file(const fs::path& p, const json& j) {
    atomic_write_text(p, j.dump(2) + "\n");
}

std::string i64s(std::int64_t v) { return std::to_string(v); }

// -- arms --

void add_arms_tasks(std::vector<Task>& tasks, const ExperimentConfig& cfg, const fs::path& dir) {
    for (int n : cfg.n_grid) {
        tasks.push_back(Task{
            "arms-n" + std::to_string(n), [cfg, dir, n]() -> std::vector<std::string> {
                int radii[1] = {n};
                ArmStats s = estimate_arms(radii, cfg.trials, cfg.seed);
                const ArmCell& c = s.cells.at(0);
                json j;
                j["n"] = c.n;
                j["trials"] = c.trials;
                j["one_arm_hits"] = c.one_arm_hits;
                j["two_arm_hits"] = c.two_arm_hits;
                j["implication_violations"] = c.implication_violations;
                std::string rel = "cells/arms_n" + std::to_string(n) + ".json";
                write_json_file(dir / rel, j);
                return {rel};
            }});
    }
    tasks.push_back(Task{"arms-aggregate", [cfg, dir]() -> std::vector<std::string> {
                             ArmStats all;
                             for (int n : cfg.n_grid) {
                                 json j = read_json_file(dir / ("cells/arms_n" +
                                                                std::to_string(n) + ".json"));
                                 ArmCell c;
                                 c.n = j.at("n").get<int>();
                                 c.trials = j.at("trials").get<std::int64_t>();
                                 c.one_arm_hits = j.at("one_arm_hits").get<std::int64_t>();
                                 c.two_arm_hits = j.at("two_arm_hits").get<std::int64_t>();
                                 c.implication_violations =
                                     j.at("implication_violations").get<std::int64_t>();
                                 all.cells.push_back(c);
                             }
                             ArmExponentFits fits = fit_arm_exponents(all, cfg.seed);

                             CsvTable csv({"n", "trials", "one_arm_hits", "two_arm_hits",
                                           "implication_violations", "pi1", "pi1_se", "pi2",
                                           "pi2_se"});
                             for (const ArmCell& c : all.cells)
                                 csv.row({i64s(c.n), i64s(c.trials), i64s(c.one_arm_hits),
                                          i64s(c.two_arm_hits), i64s(c.implication_violations),
                                          fmt_double(c.pi1()), fmt_double(c.pi1_se()),
                                          fmt_double(c.pi2()), fmt_double(c.pi2_se())});
                             csv.save(dir / "arms.csv");

                             json fj;
                             fj["fit_valid"] = all.fit_valid;
                             if (all.fit_valid) {
                                 fj["eta1_hat"] = all.eta1_hat;
                                 fj["eta1_se"] = all.eta1_se;
                                 fj["eta1_ci"] = {-fits.pi1_fit.slope_ci_hi,
                                                  -fits.pi1_fit.slope_ci_lo};
                                 fj["eta21_hat"] = all.eta21_hat;
                                 fj["eta21_se"] = all.eta21_se;
                                 fj["eta21_ci"] = {-fits.ratio_fit.slope_ci_hi,
                                                   -fits.ratio_fit.slope_ci_lo};
                                 fj["points"] = fits.pi1_fit.points;
                             }
                             write_json_file(dir / "arms_fit.json", fj);
                             return {"arms.csv", "arms_fit.json"};
                         }});
}

// -- backbone --

void add_backbone_tasks(std::vector<Task>& tasks, const ExperimentConfig& cfg,
                        const fs::path& dir) {
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        tasks.push_back(Task{
            "backbone-k" + std::to_string(k), [cfg, dir, k]() -> std::vector<std::string> {
                std::int64_t hits = 0;
                for (std::int64_t i = 0; i < cfg.clusters; ++i) {
                    RootedCluster cl = iic_approximant(
                        cfg.flavor, cfg.n, derive_seed(cfg.seed, "bb-cluster", std::uint64_t(i)),
                        cfg.p);
                    CoveringSystem sys = CoveringSystem::random_shifted(
                        derive_seed(cfg.seed, "bb-shift", std::uint64_t(i)));
                    if (root_in_deep_backbone(cl, sys, k, cfg.epsilon, BackboneEngine::Blocks))
                        ++hits;
                }
                json j;
                j["k"] = k;
                j["side"] = patch_side(k);
                j["samples"] = cfg.clusters;
                j["root_hits"] = hits;
                std::string rel = "cells/backbone_k" + std::to_string(k) + ".json";
                write_json_file(dir / rel, j);
                return {rel};
            }});
    }
    tasks.push_back(Task{
        "backbone-aggregate", [cfg, dir]() -> std::vector<std::string> {
            CsvTable csv({"k", "side", "samples", "root_hits", "p_root", "se"});
            std::vector<FitPoint> pts;
            for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
                json j = read_json_file(dir / ("cells/backbone_k" + std::to_string(k) + ".json"));
                std::int64_t samples = j.at("samples").get<std::int64_t>();
                std::int64_t hits = j.at("root_hits").get<std::int64_t>();
                double p = samples ? double(hits) / double(samples) : 0.0;
                double se = samples ? std::sqrt(p * (1 - p) / double(samples)) : 0.0;
                csv.row({i64s(k), i64s(patch_side(k)), i64s(samples), i64s(hits), fmt_double(p),
                         fmt_double(se)});
                if (p > 0.0) pts.push_back({double(patch_side(k)), p, se});
            }
            csv.save(dir / "backbone.csv");

            json fj;
            fj["points"] = pts.size();
            if (pts.size() >= 4) {
                FitLogLogOptions fo;
                fo.seed = derive_seed(cfg.seed, "backbone-fit");
                LogLogFit fit = fit_loglog(pts, fo);
                fj["valid"] = true;
                fj["slope"] = fit.slope;
                fj["slope_se"] = fit.slope_se;
                fj["slope_ci"] = {fit.slope_ci_lo, fit.slope_ci_hi};
            } else {
                fj["valid"] = false;
            }
            write_json_file(dir / "backbone_fit.json", fj);
            return {"backbone.csv", "backbone_fit.json"};
        }});
}

// -- walk --

EnsembleOptions ensemble_options(const ExperimentConfig& cfg) {
    EnsembleOptions eo;
    eo.flavor = cfg.flavor;
    eo.n = cfg.n;
    eo.p = cfg.p;
    eo.t_grid = cfg.t_grid;
    eo.r_grid = cfg.r_grid;
    eo.clusters = int(cfg.clusters);
    eo.walks_per_cluster = int(cfg.walks);
    eo.seed = cfg.seed;
    return eo;
}

json cluster_stats_json(const ClusterWalkStats& st) {
    json j;
    j["sum_at_chem_sq"] = st.sum_at_chem_sq;
    j["sum_max_chem_sq"] = st.sum_max_chem_sq;
    j["sum_at_euc_sq"] = st.sum_at_euc_sq;
    j["sum_max_euc_sq"] = st.sum_max_euc_sq;
    j["alive"] = st.alive;
    j["sum_tau_chem"] = st.sum_tau_chem;
    j["sum_tau_euc"] = st.sum_tau_euc;
    j["hit_chem"] = st.hit_chem;
    j["hit_euc"] = st.hit_euc;
    j["walks"] = st.walks;
    return j;
}

ClusterWalkStats cluster_stats_from_json(const json& j) {
    ClusterWalkStats st;
    st.sum_at_chem_sq = j.at("sum_at_chem_sq").get<std::vector<double>>();
    st.sum_max_chem_sq = j.at("sum_max_chem_sq").get<std::vector<double>>();
    st.sum_at_euc_sq = j.at("sum_at_euc_sq").get<std::vector<double>>();
    st.sum_max_euc_sq = j.at("sum_max_euc_sq").get<std::vector<double>>();
    st.alive = j.at("alive").get<std::vector<std::int32_t>>();
    st.sum_tau_chem = j.at("sum_tau_chem").get<std::vector<double>>();
    st.sum_tau_euc = j.at("sum_tau_euc").get<std::vector<double>>();
    st.hit_chem = j.at("hit_chem").get<std::vector<std::int32_t>>();
    st.hit_euc = j.at("hit_euc").get<std::vector<std::int32_t>>();
    st.walks = j.at("walks").get<int>();
    return st;
}

void walk_csv_series(CsvTable& csv, const char* name, const std::vector<EnsembleCell>& cells,
                     const std::vector<std::int64_t>& xs) {
    for (std::size_t i = 0; i < cells.size(); ++i)
        csv.row({name, i64s(xs[i]), fmt_double(cells[i].mean), fmt_double(cells[i].se),
                 i64s(cells[i].count), fmt_double(cells[i].censored_fraction)});
}

json scaling_fit_json(const ScalingFit& f) {
    json j;
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["slope_se"] = f.slope_se;
    j["slope_ci"] = {f.slope_ci_lo, f.slope_ci_hi};
    j["exponent"] = f.exponent;
    j["exponent_ci"] = {f.exponent_ci_lo, f.exponent_ci_hi};
    j["slope_nodrop"] = f.slope_nodrop;
    j["points"] = f.points;
    return j;
}

void add_walk_tasks(std::vector<Task>& tasks, const ExperimentConfig& cfg, const fs::path& dir) {
    tasks.push_back(Task{"walk-ensemble", [cfg, dir]() -> std::vector<std::string> {
                             DisplacementEnsemble ens = displacement_ensemble(ensemble_options(cfg));

                             CsvTable csv({"series", "x", "mean", "se", "count",
                                           "censored_fraction"});
                             std::vector<std::int64_t> r64(cfg.r_grid.begin(), cfg.r_grid.end());
                             walk_csv_series(csv, "max_chem_sq", ens.max_chem_sq, cfg.t_grid);
                             walk_csv_series(csv, "at_chem_sq", ens.at_chem_sq, cfg.t_grid);
                             walk_csv_series(csv, "max_euc_sq", ens.max_euc_sq, cfg.t_grid);
                             walk_csv_series(csv, "at_euc_sq", ens.at_euc_sq, cfg.t_grid);
                             walk_csv_series(csv, "tau_chem", ens.tau_chem, r64);
                             walk_csv_series(csv, "tau_euc", ens.tau_euc, r64);
                             csv.save(dir / "walk.csv");

                             json j;
                             j["per_cluster"] = json::array();
                             for (const ClusterWalkStats& st : ens.per_cluster)
                                 j["per_cluster"].push_back(cluster_stats_json(st));
                             write_json_file(dir / "cells/walk_percluster.json", j);
                             return {"walk.csv", "cells/walk_percluster.json"};
                         }});
    tasks.push_back(Task{"walk-fit", [cfg, dir]() -> std::vector<std::string> {
                             DisplacementEnsemble ens;
                             ens.opts = ensemble_options(cfg);
                             json j = read_json_file(dir / "cells/walk_percluster.json");
                             for (const json& cj : j.at("per_cluster"))
                                 ens.per_cluster.push_back(cluster_stats_from_json(cj));
                             pool_ensemble(ens);

                             FitEscapeOptions fo;
                             // the first grid point carries the strongest
                             // short-time transient; drop it only when both
                             // grids still leave 4 points for the fit
                             fo.drop_first = std::min(cfg.t_grid.size(),
                                                      cfg.r_grid.size()) >= 5;
                             fo.bootstrap = 1000;
                             fo.seed = derive_seed(cfg.seed, "walk-fit");
                             EscapeFits fits = fit_escape_exponents(ens, fo);
                             json out;
                             out["max_chem_sq"] = scaling_fit_json(fits.disp_max_chem);
                             out["at_chem_sq"] = scaling_fit_json(fits.disp_at_chem);
                             out["max_euc_sq"] = scaling_fit_json(fits.disp_max_euc);
                             out["tau_chem"] = scaling_fit_json(fits.tau_chem);
                             out["tau_euc"] = scaling_fit_json(fits.tau_euc);
                             out["ordering_q"] = {fits.ordering_q025, fits.ordering_q975};
                             out["euc_ordering_q"] = {fits.euc_ordering_q025,
                                                      fits.euc_ordering_q975};
                             out["bootstrap"] = fits.bootstrap;
                             write_json_file(dir / "walk_fit.json", out);
                             return {"walk_fit.json"};
                         }});
}

// -- weights / markov-type --

std::uint64_t wcluster_seed(const ExperimentConfig& cfg, std::int64_t i) {
    return derive_seed(cfg.seed, "wcluster", std::uint64_t(i));
}
std::uint64_t wshift_seed(const ExperimentConfig& cfg, std::int64_t i) {
    return derive_seed(cfg.seed, "wshift", std::uint64_t(i));
}

// root-frequency normalizer estimates per scale, shared by the weights and
// markov-type pipelines
json estimate_normalizers(const ExperimentConfig& cfg) {
    bool want_large = cfg.weight_mode == "hybrid";
    std::vector<std::int64_t> deep_hits(std::size_t(cfg.k_max + 1), 0);
    std::vector<std::int64_t> large_hits(std::size_t(cfg.k_max + 1), 0);
    for (std::int64_t i = 0; i < cfg.clusters; ++i) {
        RootedCluster cl = iic_approximant(cfg.flavor, cfg.n, wcluster_seed(cfg, i), cfg.p);
        CoveringSystem sys = CoveringSystem::random_shifted(wshift_seed(cfg, i));
        for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
            if (root_in_deep_backbone(cl, sys, k, cfg.epsilon, BackboneEngine::Blocks))
                ++deep_hits[std::size_t(k)];
            if (want_large) {
                auto in = large_patch_union(cl, sys, k, cfg.c4, cfg.d_prime);
                if (in[std::size_t(cl.root_local())]) ++large_hits[std::size_t(k)];
            }
        }
    }
    json scales = json::array();
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        double p = double(deep_hits[std::size_t(k)]) / double(cfg.clusters);
        json s;
        s["k"] = k;
        s["hits"] = deep_hits[std::size_t(k)];
        s["p_hat"] = p;
        s["se"] = std::sqrt(p * (1 - p) / double(cfg.clusters));
        if (want_large) {
            double q = double(large_hits[std::size_t(k)]) / double(cfg.clusters);
            s["large_hits"] = large_hits[std::size_t(k)];
            s["q_hat"] = q;
            s["q_se"] = std::sqrt(q * (1 - q) / double(cfg.clusters));
        }
        scales.push_back(s);
    }
    json j;
    j["samples"] = cfg.clusters;
    j["mode"] = cfg.weight_mode;
    j["scales"] = scales;
    return j;
}

NormalizerRecord normalizer_from(const json& scale, const char* val_key, const char* se_key,
                                 const char* what, const ExperimentConfig& cfg) {
    NormalizerRecord r;
    int k = scale.at("k").get<int>();
    r.source = std::string("ensemble:") + what + " k=" + std::to_string(k) + " n=" +
               std::to_string(cfg.n) + " x" + std::to_string(cfg.clusters);
    r.value = scale.at(val_key).get<double>();
    r.std_error = scale.at(se_key).get<double>();
    return r;
}

// Builds the configured weight field for one cluster. Falls back to the unit
// field (and says so) when every usable scale has an empty indicator, which
// would make the normalization degenerate.
WeightField build_weight_field(const ExperimentConfig& cfg, const RootedCluster& cl,
                               const CoveringSystem& sys, const json& normalizers,
                               bool* fallback) {
    *fallback = false;
    auto unit = [&cl] {
        return make_weight_field(cl, std::vector<double>(std::size_t(cl.size()), 1.0));
    };
    if (cfg.weight_mode == "unit") return unit();

    const json& scales = normalizers.at("scales");
    if (cfg.weight_mode == "scale" || cfg.weight_mode == "hybrid") {
        const json* pick = nullptr;
        for (const json& s : scales)
            if (s.at("k").get<int>() == cfg.k_max) pick = &s;
        if (!pick) throw std::runtime_error("normalizers missing scale k_max");
        double p_hat = pick->at("p_hat").get<double>();
        if (p_hat <= 0.0) {
            *fallback = true;
            return unit();
        }
        NormalizerRecord pr = normalizer_from(*pick, "p_hat", "se", "deep-root-freq", cfg);
        if (cfg.weight_mode == "scale")
            return scale_weight(cl, sys, cfg.k_max, cfg.epsilon, pr, BackboneEngine::Blocks);
        double q_hat = pick->at("q_hat").get<double>();
        if (q_hat <= 0.0) {
            *fallback = true;
            return unit();
        }
        NormalizerRecord qr = normalizer_from(*pick, "q_hat", "q_se", "large-root-freq", cfg);
        return hybrid_weight(cl, sys, cfg.k_max, cfg.epsilon, pr, qr, cfg.c4, cfg.d_prime,
                             BackboneEngine::Blocks);
    }

    // mixture over every scale with a positive normalizer
    std::vector<WeightField> parts;
    std::vector<int> js;
    for (const json& s : scales) {
        double p_hat = s.at("p_hat").get<double>();
        if (p_hat <= 0.0) continue;
        NormalizerRecord pr = normalizer_from(s, "p_hat", "se", "deep-root-freq", cfg);
        parts.push_back(scale_weight(cl, sys, s.at("k").get<int>(), cfg.epsilon, pr,
                                     BackboneEngine::Blocks));
        js.push_back(s.at("k").get<int>());
    }
    if (parts.empty()) {
        *fallback = true;
        return unit();
    }
    std::vector<MixtureComponent> comps;
    for (std::size_t i = 0; i < parts.size(); ++i) comps.push_back({js[i], &parts[i]});
    return mixture_weight(cl, comps);
}

void add_normalizer_task(std::vector<Task>& tasks, const ExperimentConfig& cfg,
                         const fs::path& dir) {
    tasks.push_back(Task{"weight-normalizers", [cfg, dir]() -> std::vector<std::string> {
                             write_json_file(dir / "normalizers.json",
                                             estimate_normalizers(cfg));
                             return {"normalizers.json"};
                         }});
}

void add_weights_tasks(std::vector<Task>& tasks, const ExperimentConfig& cfg,
                       const fs::path& dir) {
    add_normalizer_task(tasks, cfg, dir);
    tasks.push_back(Task{
        "weights-build", [cfg, dir]() -> std::vector<std::string> {
            json normalizers = read_json_file(dir / "normalizers.json");
            std::string lines;
            for (std::int64_t i = 0; i < cfg.clusters; ++i) {
                RootedCluster cl = iic_approximant(cfg.flavor, cfg.n, wcluster_seed(cfg, i),
                                                   cfg.p);
                CoveringSystem sys = CoveringSystem::random_shifted(wshift_seed(cfg, i));
                bool fallback = false;
                WeightField f = build_weight_field(cfg, cl, sys, normalizers, &fallback);
                json line;
                line["index"] = i;
                line["flavor"] = flavor_name(cfg.flavor);
                line["n"] = cfg.n;
                line["p"] = cfg.p;
                line["cluster_seed"] = wcluster_seed(cfg, i);
                line["shift_seed"] = wshift_seed(cfg, i);
                line["mode"] = cfg.weight_mode;
                line["fallback"] = fallback;
                line["vertices"] = cl.size();
                line["second_moment"] = f.second_moment;
                json norms = json::array();
                for (const NormalizerRecord& r : f.normalizers) {
                    json nj;
                    nj["source"] = r.source;
                    nj["value"] = r.value;
                    nj["std_error"] = r.std_error;
                    norms.push_back(nj);
                }
                line["normalizers"] = norms;
                line["w"] = f.w;
                lines += line.dump();
                lines += '\n';
            }
            atomic_write_text(dir / "weights.jsonl", lines);
            return {"weights.jsonl"};
        }});
    tasks.push_back(Task{
        "weights-distances", [cfg, dir]() -> std::vector<std::string> {
            json normalizers = read_json_file(dir / "normalizers.json");
            std::size_t per_cluster =
                std::size_t((cfg.pairs + cfg.clusters - 1) / cfg.clusters);
            CsvTable csv({"cluster", "dist_g", "dist_w"});
            std::vector<FitPoint> pooled;
            json per = json::array();
            for (std::int64_t i = 0; i < cfg.clusters; ++i) {
                RootedCluster cl = iic_approximant(cfg.flavor, cfg.n, wcluster_seed(cfg, i),
                                                   cfg.p);
                CoveringSystem sys = CoveringSystem::random_shifted(wshift_seed(cfg, i));
                bool fallback = false;
                WeightField f = build_weight_field(cfg, cl, sys, normalizers, &fallback);
                json cj;
                cj["cluster"] = i;
                try {
                    DistanceFit fit = verify_distance_lowerbound(
                        cl, f, per_cluster, cfg.delta, cfg.dist_floor,
                        derive_seed(cfg.seed, "dist", std::uint64_t(i)));
                    for (const DistancePair& pr : fit.pairs) {
                        csv.row({i64s(i), i64s(pr.dist_g), fmt_double(pr.dist_w)});
                        if (pr.dist_w > 0.0)
                            pooled.push_back({double(pr.dist_g), pr.dist_w, 0.0});
                    }
                    cj["slope"] = fit.slope;
                    cj["pairs"] = fit.pairs_used;
                    cj["violation_fraction"] = fit.violation_fraction;
                    cj["c_fit"] = fit.c_fit;
                } catch (const std::runtime_error& e) {
                    cj["skipped"] = e.what();
                }
                per.push_back(cj);
            }
            csv.save(dir / "dists.csv");

            json fj;
            fj["delta"] = cfg.delta;
            fj["floor"] = cfg.dist_floor;
            fj["pairs_total"] = pooled.size();
            fj["per_cluster"] = per;
            if (pooled.size() >= 4) {
                FitLogLogOptions fo;
                fo.bootstrap = 500;
                fo.seed = derive_seed(cfg.seed, "dist-fit");
                LogLogFit fit = fit_loglog(pooled, fo);
                fj["valid"] = true;
                fj["pooled_slope"] = fit.slope;
                fj["pooled_slope_ci"] = {fit.slope_ci_lo, fit.slope_ci_hi};
            } else {
                fj["valid"] = false;
            }
            write_json_file(dir / "dist_fit.json", fj);
            return {"dists.csv", "dist_fit.json"};
        }});
}

void add_mtype_tasks(std::vector<Task>& tasks, const ExperimentConfig& cfg, const fs::path& dir) {
    add_normalizer_task(tasks, cfg, dir);
    tasks.push_back(Task{
        "mtype-run", [cfg, dir]() -> std::vector<std::string> {
            json normalizers = read_json_file(dir / "normalizers.json");
            CsvTable csv({"cluster", "t", "ratio", "se", "walks", "degenerate"});
            double max_ratio = 0.0;
            std::int64_t degenerate = 0;
            for (std::int64_t i = 0; i < cfg.clusters; ++i) {
                RootedCluster cl = iic_approximant(cfg.flavor, cfg.n, wcluster_seed(cfg, i),
                                                   cfg.p);
                CoveringSystem sys = CoveringSystem::random_shifted(wshift_seed(cfg, i));
                bool fallback = false;
                WeightField f = build_weight_field(cfg, cl, sys, normalizers, &fallback);
                MarkovTypeReport rep =
                    markov_type_ratio(cl, f, cfg.t_grid, int(cfg.walks),
                                      derive_seed(cfg.seed, "mtype", std::uint64_t(i)));
                if (rep.degenerate) ++degenerate;
                for (const MarkovTypeCell& cell : rep.cells) {
                    csv.row({i64s(i), i64s(cell.t), fmt_double(cell.ratio), fmt_double(cell.se),
                             i64s(cell.walks), rep.degenerate ? "1" : "0"});
                    if (!rep.degenerate) max_ratio = std::max(max_ratio, cell.ratio);
                }
            }
            csv.save(dir / "mtype.csv");
            json j;
            j["clusters"] = cfg.clusters;
            j["degenerate_clusters"] = degenerate;
            j["max_ratio"] = max_ratio;
            j["t_grid"] = cfg.t_grid;
            write_json_file(dir / "mtype_summary.json", j);
            return {"mtype.csv", "mtype_summary.json"};
        }});
}

// -- full pipeline --

void add_pipeline_tasks(std::vector<Task>& tasks, const ExperimentConfig& cfg,
                        const fs::path& dir) {
    acceptance::Scales scales = acceptance::desk_scales(cfg);
    for (int id = 1; id <= 10; ++id) {
        tasks.push_back(Task{"criterion-" + std::to_string(id),
                             [scales, dir, id]() -> std::vector<std::string> {
                                 acceptance::CriterionResult r = acceptance::run_one(id, scales);
                                 std::string rel = "cells/crit" + std::to_string(id) + ".json";
                                 write_json_file(dir / rel, acceptance::result_json(r));
                                 return {rel};
                             }});
    }
    tasks.push_back(Task{"acceptance-report", [dir]() -> std::vector<std::string> {
                             json results = json::array();
                             int passed = 0, hard_failed = 0;
                             for (int id = 1; id <= 10; ++id) {
                                 json r = read_json_file(
                                     dir / ("cells/crit" + std::to_string(id) + ".json"));
                                 if (r.at("pass").get<bool>())
                                     ++passed;
                                 else if (r.at("hard").get<bool>())
                                     ++hard_failed;
                                 results.push_back(r);
                             }
                             json rep;
                             rep["criteria"] = results;
                             rep["passed"] = passed;
                             rep["hard_failures"] = hard_failed;
                             write_json_file(dir / "acceptance_report.json", rep);
                             return {"acceptance_report.json"};
                         }});
}

std::vector<Task> build_tasks(const ExperimentConfig& cfg, const fs::path& dir) {
    std::vector<Task> tasks;
    switch (cfg.kind) {
        case ExperimentKind::Arms: add_arms_tasks(tasks, cfg, dir); break;
        case ExperimentKind::Backbone: add_backbone_tasks(tasks, cfg, dir); break;
        case ExperimentKind::Walk: add_walk_tasks(tasks, cfg, dir); break;
        case ExperimentKind::Weights: add_weights_tasks(tasks, cfg, dir); break;
        case ExperimentKind::MarkovType: add_mtype_tasks(tasks, cfg, dir); break;
        case ExperimentKind::FullPipeline: add_pipeline_tasks(tasks, cfg, dir); break;
    }
    return tasks;
}

ManifestTask* find_task(RunManifest& m, const std::string& key) {
    for (ManifestTask& t : m.tasks)
        if (t.key == key) return &t;
    return nullptr;
}

const ManifestFile* find_file(const RunManifest& m, const std::string& path) {
    for (const ManifestFile& f : m.files)
        if (f.path == path) return &f;
    return nullptr;
}

bool outputs_fresh(const RunManifest& m, const ManifestTask& t, const fs::path& dir) {
    for (const std::string& rel : t.outputs) {
        const ManifestFile* f = find_file(m, rel);
        if (!f) return false;
        fs::path p = dir / rel;
        if (!fs::exists(p)) return false;
        if (hex64(fnv1a_file(p)) != f->fnv64) return false;
    }
    return true;
}

void record_outputs(RunManifest& m, const std::vector<std::string>& outputs,
                    const fs::path& dir) {
    for (const std::string& rel : outputs) {
        fs::path p = dir / rel;
        ManifestFile entry;
        entry.path = rel;
        entry.fnv64 = hex64(fnv1a_file(p));
        entry.bytes = std::uint64_t(fs::file_size(p));
        bool replaced = false;
        for (ManifestFile& f : m.files)
            if (f.path == rel) {
                f = entry;
                replaced = true;
            }
        if (!replaced) m.files.push_back(entry);
    }
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    validate_config(cfg);
    fs::path dir = resolve_out_dir(cfg);
    fs::create_directories(dir / "cells");
    fs::path mpath = dir / "manifest.json";

    RunManifest man;
    man.version = kVersionTag;
    man.config_hash = hex64(config_hash(cfg));
    if (fs::exists(mpath)) {
        RunManifest prev = load_manifest(mpath);
        if (prev.config_hash != man.config_hash)
            throw std::runtime_error(
                "output directory belongs to a different config (hash " + prev.config_hash +
                "); use a fresh directory");
        man = prev;
    }
    fs::path cfg_path = dir / "config.json";
    if (!fs::exists(cfg_path)) atomic_write_text(cfg_path, serialize_config(cfg));

    std::vector<Task> tasks = build_tasks(cfg, dir);
    man.tasks_total = int(tasks.size());

    auto t0 = std::chrono::steady_clock::now();
    int executed = 0;
    std::vector<std::string> failed_keys;
    for (const Task& task : tasks) {
        if (ManifestTask* prev = find_task(man, task.key);
            prev && prev->status == "done" && outputs_fresh(man, *prev, dir)) {
            if (opts.log) std::cerr << "[skip] " << task.key << "\n";
            continue;
        }
        if (opts.max_tasks >= 0 && executed >= opts.max_tasks) continue;
        ++executed;
        if (opts.log) std::cerr << "[run ] " << task.key << std::flush;
        auto s0 = std::chrono::steady_clock::now();
        ManifestTask rec;
        rec.key = task.key;
        try {
            rec.outputs = task.run();
            rec.status = "done";
            record_outputs(man, rec.outputs, dir);
        } catch (const std::exception& e) {
            rec.status = std::string("failed: ") + e.what();
            failed_keys.push_back(task.key);
        }
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
        if (opts.log)
            std::cerr << "  (" << rec.status << ", " << fmt_double(rec.seconds) << "s)\n";
        if (ManifestTask* prev = find_task(man, task.key))
            *prev = rec;
        else
            man.tasks.push_back(rec);
        man.tasks_done = 0;
        man.tasks_failed = 0;
        for (const ManifestTask& t : man.tasks) {
            if (t.status == "done") ++man.tasks_done;
            if (t.status.rfind("failed", 0) == 0) ++man.tasks_failed;
        }
        man.wall_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        t0 = std::chrono::steady_clock::now();
        save_manifest(man, mpath);
    }
    save_manifest(man, mpath);

    if (!failed_keys.empty()) {
        std::string msg = "experiment tasks failed:";
        for (const std::string& k : failed_keys) msg += " " + k;
        throw std::runtime_error(msg);
    }
    return man;
}

}  // namespace iiclab
