#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "voltgraph/dataset.hpp"
#include "voltgraph/solve.hpp"

using namespace voltgraph;
namespace fs = std::filesystem;

TEST_CASE("graph records survive a JSON round trip") {
    Circuit c = testing::make_two_branch_unit_ladder();
    SolveResult sol = solve_dc(c);
    GraphRecord r = to_record(7, circuit_to_graph(c, &sol));
    r.graph_labels["rout_ohms"] = 123.5;

    GraphRecord back = record_from_json(record_to_json(r));
    CHECK(back.id == r.id);
    CHECK(back.n_nodes == r.n_nodes);
    CHECK(back.node_types == r.node_types);
    CHECK(back.node_params == r.node_params);
    CHECK(back.edges == r.edges);
    CHECK(back.output_nodes == r.output_nodes);
    CHECK(back.targets == r.targets);
    CHECK(back.graph_labels == r.graph_labels);
    CHECK_FALSE(back.graph_target.has_value());
}

TEST_CASE("generation is deterministic and splits are positional") {
    std::string dir_a = testing::scratch_dir("ds-a");
    std::string dir_b = testing::scratch_dir("ds-b");
    LadderSpec spec;
    spec.n_lo = 1;
    spec.n_hi = 3;
    spec.seed = 2024;

    DatasetManifest a = generate_dataset(spec, 40, SplitFractions{0.5, 0.25, 0.25}, dir_a, "dup");
    DatasetManifest b = generate_dataset(spec, 40, SplitFractions{0.5, 0.25, 0.25}, dir_b, "dup");
    CHECK(a.content_hash == b.content_hash);
    CHECK(a.record_count == 40);
    CHECK(a.n_train == 20);
    CHECK(a.n_val == 10);
    CHECK(a.n_test == 10);
    CHECK(file_content_hash(dir_a + "/records.jsonl") == a.content_hash);

    std::vector<GraphRecord> all = load_records(dir_a);
    std::vector<GraphRecord> train = load_split(dir_a, Split::Train);
    std::vector<GraphRecord> val = load_split(dir_a, Split::Val);
    std::vector<GraphRecord> test = load_split(dir_a, Split::Test);
    REQUIRE(all.size() == 40);
    REQUIRE(train.size() == 20);
    REQUIRE(val.size() == 10);
    REQUIRE(test.size() == 10);
    CHECK(train.front().id == all[0].id);
    CHECK(val.front().id == all[20].id);
    CHECK(test.front().id == all[30].id);
    CHECK(test.back().id == all[39].id);

    DatasetManifest loaded = load_manifest(dir_a);
    CHECK(loaded.name == "dup");
    CHECK(loaded.content_hash == a.content_hash);
    CHECK(loaded.generator_json == a.generator_json);

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("different seeds give different content") {
    std::string dir_a = testing::scratch_dir("ds-s1");
    std::string dir_b = testing::scratch_dir("ds-s2");
    LadderSpec spec;
    spec.seed = 1;
    DatasetManifest a = generate_dataset(spec, 10, SplitFractions{1.0, 0.0, 0.0}, dir_a, "x");
    spec.seed = 2;
    DatasetManifest b = generate_dataset(spec, 10, SplitFractions{1.0, 0.0, 0.0}, dir_b, "x");
    CHECK(a.content_hash != b.content_hash);
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("rout labels match a replay of the generator stream") {
    std::string dir = testing::scratch_dir("ds-rout");
    LadderSpec spec;
    spec.n_lo = 2;
    spec.n_hi = 4;
    spec.seed = 77;
    DatasetManifest m =
        generate_dataset(spec, 15, SplitFractions{1.0, 0.0, 0.0}, dir, "routs", true);
    REQUIRE(m.rejected == 0);  // replay below assumes no redraws

    std::vector<GraphRecord> recs = load_records(dir);
    Rng rng(spec.seed);
    for (const GraphRecord& r : recs) {
        Circuit c = make_ladder(spec, rng);
        REQUIRE(r.graph_labels.count("rout_ohms") == 1);
        CHECK(r.graph_labels.at("rout_ohms") ==
              doctest::Approx(output_resistance(c, c.outputs.back())).epsilon(1e-12));
        CHECK(r.targets.size() == r.output_nodes.size());
    }
    fs::remove_all(dir);
}

TEST_CASE("targets store solved voltages for every declared output") {
    std::string dir = testing::scratch_dir("ds-targets");
    LadderSpec spec;
    spec.n_lo = 3;
    spec.n_hi = 3;
    spec.seed = 5;
    generate_dataset(spec, 5, SplitFractions{1.0, 0.0, 0.0}, dir, "t");
    Rng rng(spec.seed);
    for (const GraphRecord& r : load_records(dir)) {
        Circuit c = make_ladder(spec, rng);
        SolveResult sol = solve_dc(c);
        REQUIRE(r.targets.size() == 3);
        for (size_t i = 0; i < c.outputs.size(); ++i)
            CHECK(r.targets[i] == doctest::Approx(sol.voltages.at(c.outputs[i])).epsilon(1e-12));
    }
    fs::remove_all(dir);
}

TEST_CASE("bad generation inputs are rejected up front") {
    LadderSpec spec;
    CHECK_THROWS_AS(generate_dataset(spec, 0, SplitFractions{}, "/tmp/never", "x"),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_dataset(spec, 5, SplitFractions{0.5, 0.1, 0.1}, "/tmp/never", "x"),
                    std::invalid_argument);
}

TEST_CASE("manifest JSON round-trips including the hex content hash") {
    DatasetManifest m;
    m.name = "roundtrip";
    m.record_count = 3;
    m.n_train = 2;
    m.n_val = 1;
    m.generator_json = "{\"family\":\"ladder\"}";
    m.content_hash = 0xdeadbeefcafef00dULL;
    m.rejected = 4;
    DatasetManifest back = DatasetManifest::from_json(m.to_json());
    CHECK(back.name == m.name);
    CHECK(back.record_count == m.record_count);
    CHECK(back.n_train == m.n_train);
    CHECK(back.n_val == m.n_val);
    CHECK(back.n_test == m.n_test);
    CHECK(back.content_hash == m.content_hash);
    CHECK(back.rejected == m.rejected);
}
