#include <doctest.h>

#include <auxheat/checks.hpp>

#include <cmath>

using namespace auxheat;

TEST_CASE("log grids cover their endpoints") {
    auto g = log_grid(0.1, 10.0, 4);
    CHECK(g.front() == doctest::Approx(0.1));
    CHECK(g.back() == doctest::Approx(10.0));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK_THROWS_AS(log_grid(0.0, 1.0), config_error);
    CHECK_THROWS_AS(log_grid(2.0, 1.0), config_error);
}

TEST_CASE("volume doubling constants on the line") {
    AtomicSpace s = AtomicSpace::lattice_z1(32, ScaleFunction::power(1.5));
    auto radii = default_radius_grid(s);
    CheckReport vd = check_vd(s, base_volume_fn(s), radii);
    CHECK(vd.pass);
    CHECK(vd.constants["C_VD"] == doctest::Approx(3.0).epsilon(1e-14));
    auto D = [&s](int x) { return s.isolation_radius(x); };
    CheckReport qrvd = check_qrvd_rvd(s, base_volume_fn(s), radii, {2.0}, true, D);
    CHECK(qrvd.pass);
    CHECK(qrvd.constants["c"] == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    // below the atom scale the base volume cannot grow
    CheckReport rvd = check_qrvd_rvd(s, base_volume_fn(s), radii, {2.0, 4.0}, false, D);
    CHECK(!rvd.pass);
}

TEST_CASE("auxiliary space restores reverse doubling") {
    AtomicSpace s = AtomicSpace::lattice_z1(32, ScaleFunction::power(1.5));
    AuxSpace aux(s);
    auto radii = default_radius_grid(s);
    auto D = [&s](int x) { return s.isolation_radius(x); };
    CheckReport rvd = check_qrvd_rvd(s, aux_volume_fn(aux), radii, {2.0, 3.0, 4.0}, false, D);
    CHECK(rvd.pass);
    CHECK(rvd.constants["c"] > 1.0);
    CheckReport vd = check_vd(s, aux_volume_fn(aux), radii);
    CHECK(vd.pass);
}

TEST_CASE("quasi-uniform perfectness on the line") {
    AtomicSpace s = AtomicSpace::lattice_z1(32, ScaleFunction::power(1.5));
    auto radii = default_radius_grid(s);
    CheckReport rep = check_quasi_uniform_perfectness(s, radii, {1.5, 2.0, 3.0});
    CHECK(rep.pass);
    CHECK(rep.constants["C"] == 2.0); // 1.5 fails at r just above 1
}

TEST_CASE("closed-form kernel saturates its own comparison product") {
    AtomicSpace s = AtomicSpace::lattice_z1(16, ScaleFunction::power(1.5));
    CheckReport rep = check_jphi(s, 5000);
    CHECK(rep.pass);
    CHECK(rep.constants["c"] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.constants["C"] == doctest::Approx(1.0).epsilon(1e-12));
    AuxSpace aux(s);
    RngStream rng(3, "jphi-aux");
    CheckReport auxrep = check_jphi_aux(aux, rng, 500);
    CHECK(auxrep.pass);
    CHECK(auxrep.constants["c"] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(auxrep.constants["C"] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("jump smoothness constant is finite on the line") {
    AtomicSpace s = AtomicSpace::lattice_z1(16, ScaleFunction::power(1.5));
    auto radii = default_radius_grid(s);
    CheckReport rep = check_ujs(s, radii, 4000);
    CHECK(rep.pass);
    CHECK(rep.constants["C"] >= 1.0);
    CHECK(std::isfinite(rep.constants["C"]));
}

TEST_CASE("exit-time comparison stays within constants") {
    AtomicSpace s = AtomicSpace::lattice_z1(16, ScaleFunction::power(1.5));
    JumpTable table(s);
    RngStream rng(6, "qe");
    CheckReport rep = check_qe(s, table, {1.0, 1.5, 2.5}, 4000, rng);
    CHECK(rep.pass);
    CHECK(rep.constants["c"] > 0.0);
    CHECK(rep.constants["C"] < 20.0);
    AuxSpace aux(s);
    RngStream rng2(6, "qe-aux");
    CheckReport auxrep = check_qe_aux(aux, table, {0.3, 0.7, 1.0, 1.5}, 4000, rng2);
    CHECK(auxrep.pass);
}

TEST_CASE("heat kernel comparison on a short horizon") {
    AtomicSpace s = AtomicSpace::lattice_z1(64, ScaleFunction::power(1.5));
    std::vector<int> inner;
    for (int x = 0; x < s.size(); ++x)
        if (s.dist(x, s.center()) <= 3.0) inner.push_back(x);
    CheckReport rep = check_hk_uhkd(s, {0.01, 0.1, 0.4}, inner, 1e-10, 1e-3);
    CHECK(rep.pass);
    CHECK(rep.constants["c_HK"] > 0.0);
    CHECK(rep.constants["C_HK"] < 10.0);
    CHECK(rep.constants["C_UHKD"] > 0.5);
    CHECK(rep.constants["C_UHKD"] < 2.0);
    // long horizons leak through a small window
    CHECK_THROWS_AS(check_hk_uhkd(s, {50.0}, inner, 1e-10, 1e-3), window_overflow_error);
}

TEST_CASE("near-diagonal lower bound is positive") {
    AtomicSpace s = AtomicSpace::lattice_z1(24, ScaleFunction::power(1.5));
    CheckReport rep = check_ndl(s, {4.0, 6.0}, {0.05, 0.2, 0.8}, 0.25, 1e-10);
    CHECK(rep.pass);
    CHECK(rep.constants["c_NDL"] > 0.0);
}

TEST_CASE("fiber Poincare constant at one refinement level") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(1.5));
    AuxSpace aux(s);
    int c = s.center();
    // K = 1, r = D: two half-cells, lambda = phi(D)/8 exactly
    PoincareResult res = wx_poincare(aux, c, 1.0, 1);
    CHECK(res.lambda_max == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(res.bound == doctest::Approx(0.5));
    CheckReport rep = check_wx_poincare(aux, c, {1.0, 0.5}, 6);
    CHECK(rep.pass);
    CHECK(rep.constants["max lambda/(phi(r)/2)"] <= 1.0 + 1e-10);
    CHECK_THROWS_AS(wx_poincare(aux, c, 2.0, 3), domain_error);
}
