#include <doctest.h>

#include <auxheat/io.hpp>

#include <sstream>

using namespace auxheat;

TEST_CASE("config parsing and validation") {
    json j = {{"space", "z1"}, {"window", 16}, {"seed", 7}};
    ExperimentConfig c = parse_config(j);
    CHECK(c.space == "z1");
    CHECK(c.window == 16);
    CHECK(c.seed == 7);
    CHECK(c.spacing == 1.0);
    CHECK(c.max_depth == kDefaultMaxDepth);

    CHECK_THROWS_AS(parse_config(json{{"windw", 16}}), config_error); // unknown key
    CHECK_THROWS_AS(parse_config(json{{"window", 0}}), config_error);
    CHECK_THROWS_AS(parse_config(json{{"window", 100000}}), config_error);
    CHECK_THROWS_AS(parse_config(json{{"max_depth", 63}}), config_error);
    CHECK_THROWS_AS(parse_config(json{{"space", "z3"}}), config_error);
    CHECK_THROWS_AS(parse_config(json{{"phi", {{"type", "cubic"}}}}), config_error);
    CHECK_THROWS_AS(parse_config(json{{"phi", {{"type", "power"}, {"beta", 2}}}}), config_error);
}

TEST_CASE("config hash is stable and sensitive") {
    ExperimentConfig a = parse_config(json{{"window", 16}});
    ExperimentConfig b = parse_config(json{{"window", 16}});
    ExperimentConfig c = parse_config(json{{"window", 17}});
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("space files parse coordinates and matrices") {
    json f = {{"points", {0, 1, 3}},
              {"metric", "euclidean"},
              {"mu", {1.0, 1.0, 2.0}},
              {"kernel", {{"type", "jphi"}, {"c", 1.0}}},
              {"phi", {{"type", "power"}, {"alpha", 2.0}}}};
    AtomicSpace s = parse_space_file(f);
    CHECK(s.size() == 3);
    CHECK(s.dist(0, 2) == 3.0);
    CHECK(s.mu(2) == 2.0);

    json g = {{"points", {"a", "b"}},
              {"metric", {{"matrix", {{0.0, 2.0}, {2.0, 0.0}}}}},
              {"mu", {1.0, 1.0}},
              {"kernel", {{"type", "matrix"}, {"J", {{0.0, 0.5}, {0.5, 0.0}}}}},
              {"phi", {{"type", "power"}, {"alpha", 1.5}}}};
    AtomicSpace t = parse_space_file(g);
    CHECK(t.index_of("b") == 1);
    CHECK(t.jump_rate(0, 1) == 0.5);

    json bad = f;
    bad["extra"] = 1;
    CHECK_THROWS_AS(parse_space_file(bad), config_error);
    json mismatched = f;
    mismatched["mu"] = {1.0, 1.0};
    CHECK_THROWS_AS(parse_space_file(mismatched), config_error);
}

TEST_CASE("built-in spaces construct from configs") {
    ExperimentConfig c = parse_config(json{{"space", "z1"}, {"window", 8}});
    AtomicSpace s = build_space(c);
    CHECK(s.size() == 17);
    ExperimentConfig c2 = parse_config(json{{"space", "z2-l1"}, {"window", 3}});
    CHECK(build_space(c2).size() == 49);
    ExperimentConfig c3 = parse_config(json{{"space", json{{"file", "/nonexistent.json"}}}});
    CHECK_THROWS_AS(build_space(c3), config_error);
    CHECK_THROWS_AS(load_config("/nonexistent.json"), config_error);
}

TEST_CASE("trajectory serialization") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    JumpTable table(s);
    RngStream rng(3, "io-traj");
    Trajectory traj = simulate_original(table, s.center(), 2.0, rng);
    std::ostringstream os;
    write_trajectory_csv(os, s, traj);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,fiber,word_prefix,event");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == traj.events.size());

    std::ostringstream o2;
    write_trajectory_csv(o2, s, traj);
    CHECK(os.str() == o2.str()); // byte-identical reserialization
}

TEST_CASE("kernel table serialization") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    HeatKernel p = heat_kernel_exact(s, 0.3, 1e-10);
    std::ostringstream os;
    write_kernel_csv(os, s, p, {{s.center(), s.center()}, {s.center(), s.index_of("1")}});
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,x,y,p,q,p_over_q");
    json meta = kernel_metadata(p);
    CHECK(meta["t"] == 0.3);
    // the max is over all window rows; boundary points leak quickly
    CHECK(meta["max_window_leak"].get<double>() < 1.0);
    CHECK(meta["max_window_leak"].get<double>() > 0.0);
}

TEST_CASE("report serialization") {
    CheckReport rep;
    rep.condition = "VD";
    rep.constants["C_VD"] = 3.0;
    rep.pass = true;
    json j = report_to_json(rep);
    CHECK(j["condition"] == "VD");
    CHECK(j["constants"]["C_VD"] == 3.0);
    CHECK(j["pass"] == true);
    std::string table = report_to_table(rep);
    CHECK(table.find("VD: pass") != std::string::npos);
    CHECK(table.find("C_VD = 3") != std::string::npos);
}

TEST_CASE("word prefixes") {
    LazyWord w(0b0110ULL, 4, 1);
    CHECK(word_prefix(w, 4) == "0110");
    CHECK(word_prefix(w).size() == 16);
}
