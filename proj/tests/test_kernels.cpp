#include <doctest.h>

#include <auxheat/kernels.hpp>
#include <auxheat/rng.hpp>

#include <cmath>

using namespace auxheat;

static AtomicSpace two_point(double rate, double mu_b = 1.0) {
    std::vector<std::vector<double>> d = {{0.0, 1.0}, {1.0, 0.0}};
    MatrixKernel k{{{0.0, rate}, {rate, 0.0}}};
    return AtomicSpace::explicit_space(d, {1.0, mu_b}, k, ScaleFunction::power(2.0), {"a", "b"});
}

TEST_CASE("two-point heat kernel is exact") {
    AtomicSpace s = two_point(1.0);
    for (double t : {0.1, 0.7, 3.0}) {
        HeatKernel p = heat_kernel_exact(s, t, 1e-12);
        double cross = 0.5 * (1.0 - std::exp(-2.0 * t));
        CHECK(p.trans(0, 1) == doctest::Approx(cross).epsilon(1e-11));
        CHECK(p.trans(0, 0) == doctest::Approx(1.0 - cross).epsilon(1e-11));
        CHECK(p.density(0, 1) == doctest::Approx(cross).epsilon(1e-11));
        CHECK(p.leak(0) == doctest::Approx(0.0));
    }
}

TEST_CASE("unequal masses enter through the generator and the density") {
    AtomicSpace s = two_point(1.0, 2.0);
    // rates: a->b at J mu(b) = 2, b->a at J mu(a) = 1; stationary ~ mu
    double t = 0.4;
    HeatKernel p = heat_kernel_exact(s, t, 1e-12);
    double cross = (2.0 / 3.0) * (1.0 - std::exp(-3.0 * t));
    CHECK(p.trans(0, 1) == doctest::Approx(cross).epsilon(1e-11));
    CHECK(p.density(0, 1) == doctest::Approx(cross / 2.0).epsilon(1e-11));
    // symmetry of the density p(t,x,y) = p(t,y,x)
    CHECK(p.density(0, 1) == doctest::Approx(p.density(1, 0)).epsilon(1e-11));
}

TEST_CASE("long horizons go through the squaring path") {
    AtomicSpace s = two_point(300.0);
    double t = 2.0; // uniformization horizon 600 forces squaring
    HeatKernel p = heat_kernel_exact(s, t, 1e-10);
    CHECK(p.trans(0, 1) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(p.trans(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("singleton Dirichlet kernel is the killing exponential") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    int c = s.center();
    double t = 0.9;
    DirichletKernel pb = dirichlet_kernel(s, {c}, t, 1e-12);
    CHECK(pb.density(c, c) == doctest::Approx(std::exp(-s.rate_v(c) * t)).epsilon(1e-11));
    CHECK_THROWS_AS(pb.density(c + 1, c), domain_error);
}

TEST_CASE("a-series closed forms") {
    ScaleFunction phi = ScaleFunction::power(2.0);
    double D = 1.0;
    for (double t : {0.05, 0.3, 1.0}) {
        CHECK(a_series(t, 1, D, phi).value ==
              doctest::Approx(1.0 - std::exp(-4.0 * t)).epsilon(1e-14));
    }
    for (int m = 1; m <= 6; ++m) CHECK(a_series(0.0, m, D, phi).value == doctest::Approx(0.0));
    CHECK_THROWS_AS(a_series(0.3, 0, D, phi), domain_error);
    CHECK_THROWS_AS(a_series(-0.1, 1, D, phi), domain_error);
    CHECK_THROWS_AS(a_series_limit(0.0, D, phi), domain_error);
}

TEST_CASE("a-series sums to one over spheres") {
    ScaleFunction phi = ScaleFunction::power(2.0);
    for (double t : {0.02, 0.3, 2.0}) {
        double total = 0.0;
        for (int m = 1; m <= 60; ++m)
            total += std::exp2(-static_cast<double>(m)) * a_series(t, m, 1.0, phi).value;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("a-series limit matches deep finite truncations") {
    ScaleFunction phi = ScaleFunction::power(2.0);
    for (double t : {0.01, 0.2, 1.5}) {
        ASeries lim = a_series_limit(t, 1.0, phi);
        // a(t, m, D) -> a(t, infinity, D): drop the negative boundary term
        double deep = a_series(t, 50, 1.0, phi).value;
        CHECK(lim.value == doctest::Approx(deep).epsilon(1e-12));
        CHECK(lim.truncation_bound < 1e-12 * lim.value);
        CHECK(lim.value - 1.0 <= std::exp(-t) / t);
    }
}

TEST_CASE("auxiliary heat kernel rows integrate to the surviving mass") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    AuxSpace aux(s);
    int c = s.center();
    double t = 0.5;
    HeatKernel p = heat_kernel_exact(s, t, 1e-12);
    AuxPoint z{c, LazyWord(5)};
    double mass = 0.0;
    for (int y = 0; y < s.size(); ++y)
        if (y != c) mass += s.mu(y) * aux_heat_kernel(aux, p, z, AuxPoint{y, LazyWord(6)});
    for (int m = 1; m <= 60; ++m) {
        AuxPoint w{c, LazyWord::uniform_in_cell(z.word.sphere(m), 7)};
        mass += s.mu(c) * std::exp2(-static_cast<double>(m)) * aux_heat_kernel(aux, p, z, w);
    }
    CHECK(mass == doctest::Approx(1.0 - p.leak(c)).epsilon(1e-10));
}

TEST_CASE("auxiliary heat kernel diagonal dominates the base diagonal") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    AuxSpace aux(s);
    int c = s.center();
    HeatKernel p = heat_kernel_exact(s, 0.5, 1e-12);
    AuxPoint z{c, LazyWord(5)};
    CHECK(aux_heat_kernel(aux, p, z, z) > p.density(c, c));
    // far spheres are below the diagonal value
    AuxPoint w{c, LazyWord::uniform_in_cell(z.word.sphere(1), 9)};
    CHECK(aux_heat_kernel(aux, p, z, w) < aux_heat_kernel(aux, p, z, z));
}

TEST_CASE("comparison kernel branches") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    int c = s.center();
    // small t: on-diagonal branch is 1/V(x, sqrt(t)) = 1 for t < 1
    CHECK(q_kernel(s, 0.25, c, c) == doctest::Approx(1.0));
    CHECK(q_kernel(s, 4.1, c, c) == doctest::Approx(1.0 / 5.0));
    // off-diagonal: t/(V(x,d) phi(d)) when small
    int y = s.index_of("2");
    CHECK(q_kernel(s, 0.1, c, y) == doctest::Approx(0.1 / 12.0).epsilon(1e-14));
    CHECK_THROWS_AS(q_kernel(s, 0.0, c, c), domain_error);
}

TEST_CASE("fiber q-integral closed form") {
    AtomicSpace s = AtomicSpace::lattice_z1(8, ScaleFunction::power(2.0));
    AuxSpace aux(s);
    int c = s.center();
    // t = phi(D)/2: m0 = 1, value = 2 * 0.5 * (2 - 1) + 1 = 2
    CHECK(fiber_q_integral(aux, c, 0.5) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(fiber_q_integral_sphere_sum(aux, c, 0.5) == doctest::Approx(2.0).epsilon(1e-13));
    // above phi(D): mu(x) q(t, x, x)
    CHECK(fiber_q_integral(aux, c, 4.1) == doctest::Approx(1.0 / 5.0).epsilon(1e-14));
    CHECK_THROWS_AS(fiber_q_integral(aux, c, 0.0), domain_error);
}

TEST_CASE("chapman-kolmogorov residual on the two-point fiber") {
    AtomicSpace s = two_point(1.0);
    AuxSpace aux(s);
    double u = 0.3, v = 0.5;
    HeatKernel ps = heat_kernel_exact(s, u, 1e-13);
    HeatKernel pt = heat_kernel_exact(s, v, 1e-13);
    HeatKernel pst = heat_kernel_exact(s, u + v, 1e-13);
    RngStream rng(8, "ck-two");
    LazyWord w(rng.raw());
    AuxPoint z0{0, w};
    // same fiber, several separations, plus a cross-fiber pair
    for (int mstar : {1, 2, 4}) {
        AuxPoint z1{0, LazyWord::uniform_in_cell(w.sphere(mstar), rng.raw())};
        CkResidual r = chapman_kolmogorov_residual_aux(aux, ps, pt, pst, z0, z1);
        CHECK(r.residual < 1e-9);
    }
    AuxPoint zb{1, LazyWord(rng.raw())};
    CkResidual r = chapman_kolmogorov_residual_aux(aux, ps, pt, pst, z0, zb);
    CHECK(r.residual < 1e-9);
    CkResidual rd = chapman_kolmogorov_residual_aux(aux, ps, pt, pst, z0, z0);
    CHECK(rd.residual < 1e-9);
}
