#include "iiclab/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "iiclab/io.hpp"
#include "json.hpp"

namespace iiclab {

using nlohmann::json;

const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Arms: return "arms";
        case ExperimentKind::Backbone: return "backbone";
        case ExperimentKind::Walk: return "walk";
        case ExperimentKind::Weights: return "weights";
        case ExperimentKind::MarkovType: return "markov-type";
        case ExperimentKind::FullPipeline: return "full-pipeline";
    }
    return "?";
}

ExperimentKind kind_from(const std::string& name) {
    for (ExperimentKind k : {ExperimentKind::Arms, ExperimentKind::Backbone, ExperimentKind::Walk,
                             ExperimentKind::Weights, ExperimentKind::MarkovType,
                             ExperimentKind::FullPipeline})
        if (name == kind_name(k)) return k;
    throw std::invalid_argument("unknown experiment kind: " + name);
}

namespace {

IicFlavor flavor_from(const std::string& name) {
    if (name == "largest") return IicFlavor::Largest;
    if (name == "conditioned") return IicFlavor::Conditioned;
    throw std::invalid_argument("unknown flavor: " + name);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "kind",     "n",       "p",        "flavor",  "k_min",   "k_max",
        "epsilon",  "c4",      "d_prime",  "weight_mode", "trials", "clusters",
        "walks",    "n_grid",  "t_grid",   "r_grid",  "pairs",   "dist_floor",
        "delta",    "seed",    "out_dir",
    };
    return keys;
}

template <typename T>
void take(const json& j, const char* key, T& into) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            into = it->get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(std::string("config key '") + key + "': " + e.what());
        }
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known_keys().count(it.key()))
            throw std::invalid_argument("unknown config key: " + it.key());

    ExperimentConfig cfg;
    std::string kind = kind_name(cfg.kind), flavor = flavor_name(cfg.flavor);
    take(j, "kind", kind);
    take(j, "flavor", flavor);
    cfg.kind = kind_from(kind);
    cfg.flavor = flavor_from(flavor);
    take(j, "n", cfg.n);
    take(j, "p", cfg.p);
    take(j, "k_min", cfg.k_min);
    take(j, "k_max", cfg.k_max);
    take(j, "epsilon", cfg.epsilon);
    take(j, "c4", cfg.c4);
    take(j, "d_prime", cfg.d_prime);
    take(j, "weight_mode", cfg.weight_mode);
    take(j, "trials", cfg.trials);
    take(j, "clusters", cfg.clusters);
    take(j, "walks", cfg.walks);
    take(j, "n_grid", cfg.n_grid);
    take(j, "t_grid", cfg.t_grid);
    take(j, "r_grid", cfg.r_grid);
    take(j, "pairs", cfg.pairs);
    take(j, "dist_floor", cfg.dist_floor);
    take(j, "delta", cfg.delta);
    take(j, "seed", cfg.seed);
    take(j, "out_dir", cfg.out_dir);
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json j;
    j["kind"] = kind_name(cfg.kind);
    j["n"] = cfg.n;
    j["p"] = cfg.p;
    j["flavor"] = flavor_name(cfg.flavor);
    j["k_min"] = cfg.k_min;
    j["k_max"] = cfg.k_max;
    j["epsilon"] = cfg.epsilon;
    j["c4"] = cfg.c4;
    j["d_prime"] = cfg.d_prime;
    j["weight_mode"] = cfg.weight_mode;
    j["trials"] = cfg.trials;
    j["clusters"] = cfg.clusters;
    j["walks"] = cfg.walks;
    j["n_grid"] = cfg.n_grid;
    j["t_grid"] = cfg.t_grid;
    j["r_grid"] = cfg.r_grid;
    j["pairs"] = cfg.pairs;
    j["dist_floor"] = cfg.dist_floor;
    j["delta"] = cfg.delta;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    return j.dump(2) + "\n";  // nlohmann objects iterate in key order: canonical
}

namespace {

template <typename T>
void require_sorted_positive(const std::vector<T>& grid, const char* what) {
    if (grid.empty()) throw std::invalid_argument(std::string(what) + " must be nonempty");
    T prev = 0;
    for (T v : grid) {
        if (v <= prev)
            throw std::invalid_argument(std::string(what) +
                                        " must be strictly increasing and positive");
        prev = v;
    }
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n < 4) throw std::invalid_argument("n must be >= 4");
    if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw std::invalid_argument("p must be in [0,1]");
    if (cfg.k_min < 1 || cfg.k_max < cfg.k_min)
        throw std::invalid_argument("k range must satisfy 1 <= k_min <= k_max");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 0.5))
        throw std::invalid_argument("epsilon must be in (0, 1/2]");
    if (!(cfg.c4 > 0.0)) throw std::invalid_argument("c4 must be positive");
    if (!(cfg.d_prime < 2.0)) throw std::invalid_argument("d_prime must be < 2");
    if (cfg.weight_mode != "unit" && cfg.weight_mode != "scale" && cfg.weight_mode != "mixture" &&
        cfg.weight_mode != "hybrid")
        throw std::invalid_argument("weight_mode must be unit|scale|mixture|hybrid");
    if (cfg.trials < 1) throw std::invalid_argument("trials must be positive");
    if (cfg.clusters < 1) throw std::invalid_argument("clusters must be positive");
    if (cfg.walks < 1) throw std::invalid_argument("walks must be positive");
    if (cfg.pairs < 1) throw std::invalid_argument("pairs must be positive");
    if (cfg.dist_floor < 1) throw std::invalid_argument("dist_floor must be positive");
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("delta must be positive");
    require_sorted_positive(cfg.n_grid, "n_grid");
    require_sorted_positive(cfg.t_grid, "t_grid");
    require_sorted_positive(cfg.r_grid, "r_grid");
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    // out_dir is plumbing, not experiment identity: a run directory moved
    // elsewhere and re-pointed must still resume
    ExperimentConfig c = cfg;
    c.out_dir.clear();
    std::string s = serialize_config(c);
    return fnv1a_bytes(s.data(), s.size());
}

std::string resolve_out_dir(const ExperimentConfig& cfg) {
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    if (const char* env = std::getenv("IICLAB_OUT_DIR"); env && *env) return env;
    return "iiclab-out";
}

}  // namespace iiclab
