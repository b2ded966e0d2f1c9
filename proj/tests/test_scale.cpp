#include <doctest.h>

#include <auxheat/scale.hpp>

#include <cmath>
#include <vector>

using namespace auxheat;

TEST_CASE("power scale evaluates and inverts") {
    ScaleFunction f = ScaleFunction::power(1.5);
    CHECK(f.evaluate(0.0) == 0.0);
    CHECK(f.evaluate(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.evaluate(4.0) == doctest::Approx(8.0).epsilon(1e-15));
    ScaleFunction g = ScaleFunction::power(2.0);
    CHECK(g.invert(0.25) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.invert(0.0) == 0.0);
    CHECK_THROWS_AS(f.evaluate(-1.0), domain_error);
    CHECK_THROWS_AS(f.invert(-1.0), domain_error);
    CHECK_THROWS_AS(ScaleFunction::power(0.0), config_error);
}

TEST_CASE("power scale round-trips across twelve decades") {
    for (double alpha : {0.7, 1.5, 2.0, 3.0}) {
        ScaleFunction f = ScaleFunction::power(alpha);
        for (double r = 1e-6; r <= 1e6; r *= 1.7) {
            CHECK(f.invert(f.evaluate(r)) == doctest::Approx(r).epsilon(1e-12));
        }
    }
}

static ScaleFunction sampled_power(double alpha) {
    std::vector<double> r, phi;
    for (double x = 1e-4; x <= 1.1e4; x *= std::pow(2.0, 0.2)) {
        r.push_back(x);
        phi.push_back(std::pow(x, alpha));
    }
    return ScaleFunction::tabulated(r, phi, alpha, alpha, 0.9, 1.1);
}

TEST_CASE("tabulated scale tracks its generating power law") {
    ScaleFunction f = sampled_power(1.5);
    ScaleFunction g = ScaleFunction::power(1.5);
    for (double r = 1e-3; r <= 1e3; r *= 2.3) {
        CHECK(f.evaluate(r) == doctest::Approx(g.evaluate(r)).epsilon(1e-6));
        CHECK(f.invert(f.evaluate(r)) == doctest::Approx(r).epsilon(1e-10));
    }
    CHECK(f.evaluate(1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tabulated scale validation") {
    std::vector<double> r = {0.5, 1.0, 2.0};
    std::vector<double> phi = {0.25, 1.0, 4.0};
    // grid too sparse: only one sample per octave
    CHECK_THROWS_AS(ScaleFunction::tabulated(r, phi, 2, 2, 1, 1), config_error);
    std::vector<double> r2 = {1.0, 1.1, 1.05};
    std::vector<double> p2 = {1.0, 1.2, 1.3};
    CHECK_THROWS_AS(ScaleFunction::tabulated(r2, p2, 2, 2, 1, 1), config_error);
    CHECK_THROWS_AS(ScaleFunction::tabulated({1.0}, {1.0}, 2, 2, 1, 1), config_error);
}
