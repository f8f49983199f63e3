#include "iiclab/config.hpp"

#include <cstdlib>
#include <stdexcept>

#include "doctest.h"

using namespace iiclab;

TEST_CASE("serialize then parse is the identity") {
    ExperimentConfig c;
    c.kind = ExperimentKind::Walk;
    c.n = 256;
    c.p = 0.5;
    c.flavor = IicFlavor::Largest;
    c.k_min = 2;
    c.k_max = 7;
    c.epsilon = 0.3333;
    c.c4 = 0.5;
    c.d_prime = 1.9;
    c.weight_mode = "hybrid";
    c.trials = 12345;
    c.clusters = 77;
    c.walks = 9;
    c.n_grid = {8, 16, 64};
    c.t_grid = {4, 16, 256, 4096};
    c.r_grid = {2, 3, 5};
    c.pairs = 4242;
    c.dist_floor = 6;
    c.delta = 0.125;
    c.seed = 0xDEADBEEFCAFEull;
    c.out_dir = "runs/walk-a";
    ExperimentConfig back = parse_config(serialize_config(c));
    CHECK(back == c);
    CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("defaults survive an empty object") {
    ExperimentConfig d;
    ExperimentConfig parsed = parse_config("{}");
    CHECK(parsed == d);
}

TEST_CASE("unknown keys are rejected") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"trails": 10})"),
                         doctest::Contains("unknown config key: trails"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"([1,2,3])"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("not json"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"trials": "lots"})"), std::invalid_argument);
}

TEST_CASE("validation catches bad values") {
    CHECK_THROWS_AS(parse_config(R"({"n": 2})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"p": 1.5})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"k_min": 0})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"k_min": 5, "k_max": 3})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"epsilon": 0.75})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"d_prime": 2.0})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"weight_mode": "heavy"})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"trials": 0})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"n_grid": []})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"n_grid": [8, 8]})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"t_grid": [16, 8]})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"kind": "sideways"})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"flavor": "smallest"})"), std::invalid_argument);
}

TEST_CASE("kind names round trip") {
    for (ExperimentKind k : {ExperimentKind::Arms, ExperimentKind::Backbone, ExperimentKind::Walk,
                             ExperimentKind::Weights, ExperimentKind::MarkovType,
                             ExperimentKind::FullPipeline})
        CHECK(kind_from(kind_name(k)) == k);
    CHECK_THROWS_AS(kind_from("nope"), std::invalid_argument);
}

TEST_CASE("out dir resolution order") {
    ExperimentConfig c;
    c.out_dir = "explicit";
    CHECK(resolve_out_dir(c) == "explicit");
    c.out_dir.clear();
    setenv("IICLAB_OUT_DIR", "from-env", 1);
    CHECK(resolve_out_dir(c) == "from-env");
    unsetenv("IICLAB_OUT_DIR");
    CHECK(resolve_out_dir(c) == "iiclab-out");
}

TEST_CASE("config hash tracks content") {
    ExperimentConfig a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 1;
    CHECK(config_hash(a) != config_hash(b));
}
