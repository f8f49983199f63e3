// Command line front end. Estimation subcommands assemble an ExperimentConfig
// and hand it to run_experiment, so their outputs are identical to config-file
// driven runs; the rest are direct utilities.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iiclab/acceptance.hpp"
#include "iiclab/covering.hpp"
#include "iiclab/harness.hpp"
#include "iiclab/io.hpp"
#include "iiclab/stats.hpp"
#include "json.hpp"

using namespace iiclab;

namespace {

// flags shared by every estimation subcommand; only flags the user actually
// passed override the config file, so defaults never clobber a loaded value
struct ConfigFlags {
    std::string config_path;
    std::vector<CLI::Option*> opts;
    ExperimentConfig staged;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file to start from");
        auto track = [this](CLI::Option* o) { opts.push_back(o); };
        track(cmd->add_option("--n", staged.n, "box half-width"));
        track(cmd->add_option("--p", staged.p, "bond probability"));
        track(cmd->add_option_function<std::string>(
            "--flavor", [this](const std::string& v) { staged.flavor = flavor_from_name(v); },
            "cluster flavor: largest|conditioned"));
        track(cmd->add_option("--k-min", staged.k_min, "smallest covering scale"));
        track(cmd->add_option("--k-max", staged.k_max, "largest covering scale"));
        track(cmd->add_option("--epsilon", staged.epsilon, "deep-depth fraction of patch side"));
        track(cmd->add_option("--c4", staged.c4, "large-patch volume constant"));
        track(cmd->add_option("--d-prime", staged.d_prime, "large-patch volume exponent"));
        track(cmd->add_option("--weight-mode", staged.weight_mode,
                              "unit|scale|mixture|hybrid"));
        track(cmd->add_option("--trials", staged.trials, "sampling trials"));
        track(cmd->add_option("--clusters", staged.clusters, "clusters to draw"));
        track(cmd->add_option("--walks", staged.walks, "walks per cluster"));
        track(cmd->add_option("--n-grid", staged.n_grid, "radii grid")->delimiter(','));
        track(cmd->add_option("--t-grid", staged.t_grid, "walk horizon grid")->delimiter(','));
        track(cmd->add_option("--r-grid", staged.r_grid, "hitting radius grid")->delimiter(','));
        track(cmd->add_option("--pairs", staged.pairs, "distance pairs to sample"));
        track(cmd->add_option("--dist-floor", staged.dist_floor, "minimum chemical distance"));
        track(cmd->add_option("--delta", staged.delta, "distance exponent slack"));
        track(cmd->add_option("--seed", staged.seed, "master seed"));
        track(cmd->add_option("--out", staged.out_dir, "output directory"));
    }

    ExperimentConfig resolve(ExperimentKind kind) const {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        cfg.kind = kind;
        // copy each flagged field over the loaded config
        const ExperimentConfig& st = staged;
        std::size_t i = 0;
        auto flagged = [&]() { return opts[i++]->count() > 0; };
        if (flagged()) cfg.n = st.n;
        if (flagged()) cfg.p = st.p;
        if (flagged()) cfg.flavor = st.flavor;
        if (flagged()) cfg.k_min = st.k_min;
        if (flagged()) cfg.k_max = st.k_max;
        if (flagged()) cfg.epsilon = st.epsilon;
        if (flagged()) cfg.c4 = st.c4;
        if (flagged()) cfg.d_prime = st.d_prime;
        if (flagged()) cfg.weight_mode = st.weight_mode;
        if (flagged()) cfg.trials = st.trials;
        if (flagged()) cfg.clusters = st.clusters;
        if (flagged()) cfg.walks = st.walks;
        if (flagged()) cfg.n_grid = st.n_grid;
        if (flagged()) cfg.t_grid = st.t_grid;
        if (flagged()) cfg.r_grid = st.r_grid;
        if (flagged()) cfg.pairs = st.pairs;
        if (flagged()) cfg.dist_floor = st.dist_floor;
        if (flagged()) cfg.delta = st.delta;
        if (flagged()) cfg.seed = st.seed;
        if (flagged()) cfg.out_dir = st.out_dir;
        validate_config(cfg);
        return cfg;
    }

  private:
    static IicFlavor flavor_from_name(const std::string& v) {
        if (v == "largest") return IicFlavor::Largest;
        if (v == "conditioned") return IicFlavor::Conditioned;
        throw CLI::ValidationError("--flavor", "expected largest|conditioned");
    }
};

int run_kind(const ConfigFlags& flags, ExperimentKind kind, bool quiet, int max_tasks) {
    ExperimentConfig cfg = flags.resolve(kind);
    try {
        RunManifest man = run_experiment(cfg, {max_tasks, !quiet});
        std::printf("%d/%d tasks done in %s; outputs in %s\n", man.tasks_done, man.tasks_total,
                    fmt_double(man.wall_seconds).c_str(), resolve_out_dir(cfg).c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int cmd_sample(int n, double p, std::uint64_t seed, const std::string& out,
               const std::string& describe) {
    if (!describe.empty()) {
        PercolationSample s = read_sample(describe);
        nlohmann::json j;
        j["n"] = s.region.n;
        j["offset"] = {s.region.offset.x, s.region.offset.y};
        j["p"] = s.p;
        j["seed"] = s.seed;
        j["edges"] = s.region.edge_count();
        j["open"] = s.open_count();
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    PercolationSample s = sample_bond_config(n, p, seed);
    write_sample(s, out);
    std::printf("wrote %s (%lld edges, %llu open)\n", out.c_str(),
                static_cast<long long>(s.region.edge_count()),
                static_cast<unsigned long long>(s.open_count()));
    return 0;
}

int cmd_covering(int kmax, int window, int shifts, int witnesses, std::uint64_t seed) {
    bool all_ok = true;
    std::printf("%-6s %-6s %-8s %-7s %-6s %-13s %s\n", "shift", "k", "covered", "bounded", "mult",
                "pad_failures", "vertices");
    for (int rep = 0; rep < shifts; ++rep) {
        CoveringSystem sys =
            CoveringSystem::random_shifted(derive_seed(seed, "cov-shift", std::uint64_t(rep)));
        for (int k = 1; k <= kmax; ++k) {
            CoveringCheck c = verify_covering(sys, k, window, witnesses,
                                              derive_seed(seed, "cov-wit",
                                                          std::uint64_t(rep * 64 + k)));
            bool ok = c.covered && c.bounded && c.max_multiplicity + 1 <= 10 &&
                      c.padding_failures == 0;
            all_ok = all_ok && ok;
            std::printf("%-6d %-6d %-8s %-7s %-6d %-13lld %lld\n", rep, k,
                        c.covered ? "yes" : "NO", c.bounded ? "yes" : "NO",
                        c.max_multiplicity + 1, static_cast<long long>(c.padding_failures),
                        static_cast<long long>(c.vertices_checked));
        }
    }
    return all_ok ? 0 : 1;
}

int cmd_fit(const std::string& path, int bootstrap, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) {
        std::fprintf(stderr, "error: cannot open %s\n", path.c_str());
        return 1;
    }
    std::vector<FitPoint> pts;
    std::string line;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        FitPoint p;
        if (!(ss >> p.x >> p.y)) {
            if (!header_skipped) {
                header_skipped = true;  // tolerate one header row
                continue;
            }
            std::fprintf(stderr, "error: bad point line: %s\n", line.c_str());
            return 1;
        }
        ss >> p.yerr;
        pts.push_back(p);
    }
    try {
        LogLogFit f = fit_loglog(pts, {bootstrap, seed});
        nlohmann::json j;
        j["slope"] = f.slope;
        j["intercept"] = f.intercept;
        j["slope_se"] = f.slope_se;
        j["slope_ci"] = {f.slope_ci_lo, f.slope_ci_hi};
        j["points"] = f.points;
        j["bootstrap_used"] = f.bootstrap_used;
        std::cout << j.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int cmd_report(const std::string& dir_or_file) {
    namespace fs = std::filesystem;
    fs::path p = dir_or_file;
    if (fs::is_directory(p)) p /= "acceptance_report.json";
    std::ifstream in(p);
    if (!in) {
        std::fprintf(stderr, "error: no report at %s (run the full-pipeline experiment first)\n",
                     p.string().c_str());
        return 1;
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s is not a valid report: %s\n", p.string().c_str(),
                     e.what());
        return 1;
    }
    std::printf("%-4s %-6s %-34s %-9s %s\n", "id", "status", "criterion", "seconds", "detail");
    for (const auto& c : j.at("criteria")) {
        bool pass = c.at("pass").get<bool>();
        bool hard = c.value("hard", true);
        std::printf("%-4d %-6s %-34s %-9.1f %s\n", c.at("id").get<int>(),
                    pass      ? "pass"
                    : hard    ? "FAIL"
                              : "fail*",
                    c.at("name").get<std::string>().c_str(), c.value("seconds", 0.0),
                    c.at("detail").get<std::string>().c_str());
    }
    int hard_failures = j.at("hard_failures").get<int>();
    std::printf("passed %d, hard failures %d%s\n", j.at("passed").get<int>(), hard_failures,
                hard_failures ? "" : " (fail* entries are advisory)");
    return hard_failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation laboratory for random walks on critical percolation clusters"};
    app.require_subcommand(1);

    // sample
    auto* sample = app.add_subcommand("sample", "draw one bond configuration to a binary file");
    int sp_n = 64;
    double sp_p = 0.5;
    std::uint64_t sp_seed = 0;
    std::string sp_out = "sample.iicb", sp_describe;
    sample->add_option("--n", sp_n, "box half-width");
    sample->add_option("--p", sp_p, "bond probability");
    sample->add_option("--seed", sp_seed, "sample seed");
    sample->add_option("--out", sp_out, "output path");
    sample->add_option("--describe", sp_describe, "print the header of an existing sample");

    // covering
    auto* covering = app.add_subcommand("covering", "verify covering system guarantees");
    int cv_kmax = 8, cv_window = 128, cv_shifts = 5, cv_witnesses = 100;
    std::uint64_t cv_seed = 0;
    covering->add_option("--k-max", cv_kmax, "largest scale to check");
    covering->add_option("--window", cv_window, "window half-width");
    covering->add_option("--shifts", cv_shifts, "random shifted systems");
    covering->add_option("--witnesses", cv_witnesses, "padding witnesses per scale");
    covering->add_option("--seed", cv_seed, "master seed");

    // estimation pipelines
    bool quiet = false;
    int max_tasks = -1;
    ConfigFlags arms_f, bb_f, weights_f, dist_f, walk_f, mtype_f, exp_f;
    auto* arms = app.add_subcommand("arms", "estimate one- and two-arm probabilities");
    arms_f.attach(arms);
    auto* bb = app.add_subcommand("backbone-stats", "deep-backbone root frequencies by scale");
    bb_f.attach(bb);
    auto* weights = app.add_subcommand("weights", "build conformal weight fields");
    weights_f.attach(weights);
    auto* dist = app.add_subcommand("distances", "weighted vs chemical distance comparison");
    dist_f.attach(dist);
    auto* walk = app.add_subcommand("walk", "displacement and hitting-time ensembles");
    walk_f.attach(walk);
    auto* mtype = app.add_subcommand("mtype", "markov-type ratio estimates");
    mtype_f.attach(mtype);
    auto* exp_cmd = app.add_subcommand("experiment", "run any experiment from a config file");
    exp_f.attach(exp_cmd);
    std::string exp_kind;
    exp_cmd->add_option("--kind", exp_kind, "override the config's experiment kind");
    exp_cmd->add_option("--max-tasks", max_tasks, "stop after this many executed tasks");
    for (CLI::App* c : {arms, bb, weights, dist, walk, mtype, exp_cmd})
        c->add_flag("--quiet", quiet, "suppress task progress lines");

    // fit
    auto* fit = app.add_subcommand("fit", "log-log fit of x,y[,yerr] points from a CSV file");
    std::string fit_path;
    int fit_bootstrap = 1000;
    std::uint64_t fit_seed = 0;
    fit->add_option("file", fit_path, "CSV with columns x,y[,yerr]")->required();
    fit->add_option("--bootstrap", fit_bootstrap, "bootstrap resamples");
    fit->add_option("--seed", fit_seed, "bootstrap seed");

    // report
    auto* report = app.add_subcommand("report", "render an acceptance report table");
    std::string report_path = ".";
    report->add_option("path", report_path, "run directory or report file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sample->parsed()) return cmd_sample(sp_n, sp_p, sp_seed, sp_out, sp_describe);
        if (covering->parsed())
            return cmd_covering(cv_kmax, cv_window, cv_shifts, cv_witnesses, cv_seed);
        if (arms->parsed()) return run_kind(arms_f, ExperimentKind::Arms, quiet, max_tasks);
        if (bb->parsed()) return run_kind(bb_f, ExperimentKind::Backbone, quiet, max_tasks);
        if (weights->parsed())
            return run_kind(weights_f, ExperimentKind::Weights, quiet, max_tasks);
        if (dist->parsed()) return run_kind(dist_f, ExperimentKind::Weights, quiet, max_tasks);
        if (walk->parsed()) return run_kind(walk_f, ExperimentKind::Walk, quiet, max_tasks);
        if (mtype->parsed())
            return run_kind(mtype_f, ExperimentKind::MarkovType, quiet, max_tasks);
        if (exp_cmd->parsed()) {
            ExperimentConfig cfg = exp_f.resolve(
                exp_kind.empty()
                    ? (exp_f.config_path.empty() ? ExperimentKind::FullPipeline
                                                 : load_config(exp_f.config_path).kind)
                    : kind_from(exp_kind));
            try {
                RunManifest man = run_experiment(cfg, {max_tasks, !quiet});
                std::printf("%d/%d tasks done; outputs in %s\n", man.tasks_done, man.tasks_total,
                            resolve_out_dir(cfg).c_str());
                return 0;
            } catch (const std::exception& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                return 1;
            }
        }
        if (fit->parsed()) return cmd_fit(fit_path, fit_bootstrap, fit_seed);
        if (report->parsed()) return cmd_report(report_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
