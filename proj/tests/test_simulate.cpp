#include <doctest.h>

#include <auxheat/simulate.hpp>

#include <cmath>

using namespace auxheat;

static AtomicSpace two_point(double rate, double mu_b = 1.0) {
    std::vector<std::vector<double>> d = {{0.0, 1.0}, {1.0, 0.0}};
    MatrixKernel k{{{0.0, rate}, {rate, 0.0}}};
    return AtomicSpace::explicit_space(d, {1.0, mu_b}, k, ScaleFunction::power(2.0), {"a", "b"});
}

TEST_CASE("jump table rates") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    JumpTable table(s);
    for (int x = 0; x < s.size(); ++x)
        CHECK(table.total_rate(x) == doctest::Approx(s.rate_v(x)).epsilon(1e-12));
    RngStream rng(2, "jump-table");
    for (int i = 0; i < 200; ++i) {
        int y = table.sample_target(s.center(), rng);
        CHECK(y != s.center());
    }
}

TEST_CASE("trajectories are reproducible") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    JumpTable table(s);
    RngStream r1(42, "traj"), r2(42, "traj"), r3(43, "traj");
    Trajectory a = simulate_original(table, s.center(), 50.0, r1);
    Trajectory b = simulate_original(table, s.center(), 50.0, r2);
    Trajectory c = simulate_original(table, s.center(), 50.0, r3);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].t == b.events[i].t);
        CHECK(a.events[i].x == b.events[i].x);
        CHECK(a.events[i].kind == b.events[i].kind);
    }
    bool differs = a.events.size() != c.events.size();
    for (std::size_t i = 0; !differs && i < a.events.size(); ++i)
        differs = a.events[i].t != c.events[i].t || a.events[i].x != c.events[i].x;
    CHECK(differs);
    CHECK(a.events.front().kind == EventKind::start);
    CHECK((a.reason != Trajectory::Reason::horizon ||
           a.events.back().kind == EventKind::horizon));
    for (std::size_t i = 1; i < a.events.size(); ++i) CHECK(a.events[i].t >= a.events[i - 1].t);
}

TEST_CASE("two-point chain occupancy") {
    AtomicSpace s = two_point(1.0);
    JumpTable table(s);
    RngStream rng(7, "two-point");
    const int N = 20000;
    const double t = 0.7;
    int at_b = 0;
    for (int i = 0; i < N; ++i) {
        Trajectory traj = simulate_original(table, 0, t, rng);
        if (traj.events.back().x == 1) ++at_b;
    }
    double p = 0.5 * (1.0 - std::exp(-2.0 * t));
    CHECK(std::abs(at_b - N * p) < 3.0 * std::sqrt(N * p * (1.0 - p)));
}

TEST_CASE("refresh clock index law") {
    RngStream rng(9, "clock");
    const int N = 50000;
    const double t = 0.3, phi_D = 1.0;
    std::vector<int> counts(8, 0);
    for (int i = 0; i < N; ++i) {
        int j = sample_first_clock_index(t, phi_D, rng, 40);
        if (j < 8) ++counts[static_cast<std::size_t>(j)];
    }
    auto cdf = [&](int j) {
        return -std::expm1(-(3.0 * std::exp2(static_cast<double>(j + 1)) - 2.0) * t);
    };
    for (int j = 0; j < 8; ++j) {
        double p = cdf(j) - (j > 0 ? cdf(j - 1) : 0.0);
        double sd = std::sqrt(N * p * (1.0 - p));
        CHECK(std::abs(counts[static_cast<std::size_t>(j)] - N * p) <= 3.0 * sd + 1.0);
    }
}

TEST_CASE("refresh keeps the cell of the winning clock") {
    RngStream rng(4, "refresh");
    LazyWord w(rng.raw());
    // a type-j refresh keeps bits 1..j: disagreement with the start is > j
    for (int i = 0; i < 500; ++i) {
        int j = sample_first_clock_index(0.1, 1.0, rng, 40);
        LazyWord wt = w.refreshed_from(j + 1, rng.raw());
        int m = disagreement_index(w, wt);
        CHECK((m == 0 || m > j));
    }
}

TEST_CASE("fiber exit time at depth zero is the fiber-exit clock") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    AuxSpace aux(s);
    int c = s.center();
    double v = s.rate_v(c);
    RngStream rng(12, "fiber-exit");
    const int N = 20000;
    double sum = 0.0;
    for (int i = 0; i < N; ++i) sum += exit_time_fiber(aux, c, 0, rng);
    double mean = sum / N;
    CHECK(std::abs(mean - 1.0 / v) < 3.0 / (v * std::sqrt(static_cast<double>(N))));
}

TEST_CASE("base exit from the singleton ball is the first jump") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    JumpTable table(s);
    int c = s.center();
    double v = s.rate_v(c);
    RngStream rng(13, "base-exit");
    const int N = 20000;
    double sum = 0.0;
    for (int i = 0; i < N; ++i) sum += exit_time_base(table, c, 1.0, rng);
    double mean = sum / N;
    CHECK(std::abs(mean - 1.0 / v) < 3.0 / (v * std::sqrt(static_cast<double>(N))));
}

TEST_CASE("auxiliary trajectories carry words and dispatch exits") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    AuxSpace aux(s);
    JumpTable table(s);
    RngStream rng(21, "aux-traj");
    Trajectory traj = simulate_aux(aux, table, AuxPoint{s.center(), LazyWord(rng.raw())}, 5.0, rng);
    for (const auto& e : traj.events) CHECK(e.has_word);
    AuxPoint z{s.center(), LazyWord(rng.raw())};
    CHECK(exit_time_aux(aux, table, z, 0.6, rng) > 0.0);  // fiber branch
    CHECK(exit_time_aux(aux, table, z, 1.5, rng) > 0.0);  // base branch
    CHECK_THROWS_AS(simulate_aux(aux, table, z, 0.0, rng), domain_error);
    CHECK_THROWS_AS(exit_time_fiber(aux, s.center(), -1, rng), domain_error);
}
