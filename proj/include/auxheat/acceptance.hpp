#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "aux_space.hpp"
#include "checks.hpp"
#include "common.hpp"
#include "kernels.hpp"
#include "rng.hpp"
#include "simulate.hpp"
#include "space.hpp"
#include "ultra.hpp"

namespace auxheat {

struct Criterion {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline std::vector<double> geom_grid(double lo, double hi, int n) {
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return g;
}

// two-sided KS distance of sorted samples against a cdf
template <class Cdf>
inline double ks_statistic(std::vector<double>& samples, Cdf cdf) {
    std::sort(samples.begin(), samples.end());
    double D = 0.0;
    std::size_t n = samples.size();
    for (std::size_t i = 0; i < n; ++i) {
        double F = cdf(samples[i]);
        D = std::max(D, std::abs(F - static_cast<double>(i) / n));
        D = std::max(D, std::abs(static_cast<double>(i + 1) / n - F));
    }
    return D;
}

inline AtomicSpace path7_space() {
    int n = 7;
    std::vector<std::vector<double>> dist(7, std::vector<double>(7, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::abs(i - j);
    std::vector<double> mu = {1.0, 2.0, 1.0, 1.5, 1.0, 0.5, 1.0};
    std::vector<std::vector<double>> J(7, std::vector<double>(7, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) {
                double d = std::abs(i - j);
                J[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1.0 / (d * (1.0 + d));
            }
    return AtomicSpace::explicit_space(std::move(dist), std::move(mu), MatrixKernel{std::move(J)},
                                       ScaleFunction::power(1.5));
}

// word differing from w first at exactly index m
inline LazyWord word_at_disagreement(const LazyWord& w, int m, std::uint64_t seed) {
    return LazyWord::uniform_in_cell(w.sphere(m), seed);
}

} // namespace detail

// 1. Empirical sphere occupancy of the refreshing process against the
// closed-form cell law, 3 sigma per (t, m).
inline Criterion accept_cell_law(std::uint64_t seed) {
    Criterion c{"cell-law", true, ""};
    ScaleFunction phi = ScaleFunction::power(2.0);
    AtomicSpace sp = AtomicSpace::lattice_z1(8, phi);
    AuxSpace aux(sp);
    int x = sp.center();
    double phi_D = phi.evaluate(aux.D(x)); // 1
    RngStream rng(seed, "cell-law");
    LazyWord w0(rng.raw());
    const int N = 100000, Mmax = 8;
    double worst_sigma = 0.0;
    for (double t : {0.05, 0.2, 1.0}) {
        std::vector<long> counts(Mmax + 1, 0);
        for (int i = 0; i < N; ++i) {
            LazyWord wt = refresh_state(w0, t, phi_D, rng, aux.max_depth());
            int m = disagreement_index(w0, wt, aux.max_depth());
            if (m >= 1 && m <= Mmax) ++counts[static_cast<std::size_t>(m)];
        }
        for (int m = 1; m <= Mmax; ++m) {
            double p = std::exp2(-static_cast<double>(m)) * a_series(t, m, 1.0, phi).value;
            double sd = std::sqrt(N * p * (1.0 - p));
            double dev = std::abs(counts[static_cast<std::size_t>(m)] - N * p);
            worst_sigma = std::max(worst_sigma, sd > 0 ? dev / sd : 0.0);
            if (dev > 3.0 * sd) c.pass = false;
        }
    }
    c.detail = "worst deviation " + detail::num(worst_sigma) + " sigma over t in {0.05,0.2,1}, m <= 8";
    return c;
}

// 2. Fiber escape times: exponential with the stated rate; mean within
// 3 sigma and KS not rejected at alpha = 0.01.
inline Criterion accept_escape_time(std::uint64_t seed) {
    Criterion c{"escape-time", true, ""};
    ScaleFunction phi = ScaleFunction::power(2.0);
    AtomicSpace sp = AtomicSpace::lattice_z1(8, phi);
    AuxSpace aux(sp);
    int x = sp.center();
    double v = sp.rate_v(x);
    RngStream rng(seed, "escape-time");
    const int N = 100000, Nks = 10000;
    const double ks_crit = 1.6276 / std::sqrt(static_cast<double>(Nks)); // alpha = 0.01
    double worst_sigma = 0.0, worst_ks = 0.0;
    for (int m = 0; m <= 3; ++m) {
        double rate = v + std::exp2(static_cast<double>(m + 1)) - 2.0; // phi(D)=1
        double mean_exp = 1.0 / rate;
        double sum = 0.0;
        std::vector<double> ks_samples;
        ks_samples.reserve(Nks);
        for (int i = 0; i < N; ++i) {
            double tau = exit_time_fiber(aux, x, m, rng);
            sum += tau;
            if (i < Nks) ks_samples.push_back(tau);
        }
        double mean = sum / N;
        double sigma = mean_exp / std::sqrt(static_cast<double>(N)); // sd of Exp = mean
        worst_sigma = std::max(worst_sigma, std::abs(mean - mean_exp) / sigma);
        if (std::abs(mean - mean_exp) > 3.0 * sigma) c.pass = false;
        double D = detail::ks_statistic(ks_samples, [&](double s) { return -std::expm1(-rate * s); });
        worst_ks = std::max(worst_ks, D / ks_crit);
        if (D > ks_crit) c.pass = false;
    }
    c.detail = "worst mean deviation " + detail::num(worst_sigma) + " sigma, worst KS " +
               detail::num(worst_ks) + " of critical, m in 0..3";
    return c;
}

// 3. Chapman-Kolmogorov identity for the auxiliary kernel on a 7-point path.
inline Criterion accept_chapman_kolmogorov(std::uint64_t seed) {
    Criterion c{"chapman-kolmogorov", true, ""};
    AtomicSpace sp = detail::path7_space();
    AuxSpace aux(sp);
    RngStream rng(seed, "ck");
    std::vector<std::pair<AuxPoint, AuxPoint>> pairs;
    for (auto [x0, x1] : std::vector<std::pair<int, int>>{{0, 3}, {1, 5}, {2, 6}, {0, 6}, {3, 4}, {2, 2}}) {
        if (x0 != x1) {
            pairs.push_back({AuxPoint{x0, LazyWord(rng.raw())}, AuxPoint{x1, LazyWord(rng.raw())}});
        }
    }
    for (int mstar : {1, 2, 3}) {
        LazyWord w(rng.raw());
        pairs.push_back({AuxPoint{2, w}, AuxPoint{2, detail::word_at_disagreement(w, mstar, rng.raw())}});
    }
    {
        LazyWord w(rng.raw());
        pairs.push_back({AuxPoint{4, w}, AuxPoint{4, detail::word_at_disagreement(w, 2, rng.raw())}});
    }
    double worst = 0.0;
    for (auto [s, t] : std::vector<std::pair<double, double>>{{0.1, 0.1}, {0.5, 1.0}}) {
        HeatKernel ps = heat_kernel_exact(sp, s, 1e-12);
        HeatKernel pt = heat_kernel_exact(sp, t, 1e-12);
        HeatKernel pst = heat_kernel_exact(sp, s + t, 1e-12);
        for (const auto& [z0, z1] : pairs) {
            CkResidual r = chapman_kolmogorov_residual_aux(aux, ps, pt, pst, z0, z1);
            worst = std::max(worst, r.residual);
            if (r.residual >= 1e-8) c.pass = false;
        }
    }
    c.detail = "worst residual " + detail::num(worst) + " over " + std::to_string(2 * pairs.size()) +
               " (s,t,pair) cases, bound 1e-8";
    return c;
}

// 4. Coupling: the projected auxiliary process has the original law.
inline Criterion accept_coupling(std::uint64_t seed) {
    Criterion c{"coupling", true, ""};
    AtomicSpace sp = detail::path7_space();
    AuxSpace aux(sp);
    JumpTable table(sp);
    RngStream rng(seed, "coupling");
    const int N = 100000;
    const double t = 0.5;
    int x0 = 3;
    std::vector<long> counts(static_cast<std::size_t>(sp.size()), 0);
    for (int i = 0; i < N; ++i) {
        Trajectory traj = simulate_aux(aux, table, AuxPoint{x0, LazyWord(rng.raw())}, t, rng);
        ++counts[static_cast<std::size_t>(traj.events.back().x)];
    }
    HeatKernel p = heat_kernel_exact(sp, t, 1e-12);
    double tv = 0.0;
    for (int y = 0; y < sp.size(); ++y)
        tv += std::abs(static_cast<double>(counts[static_cast<std::size_t>(y)]) / N - p.trans(x0, y));
    tv *= 0.5;
    c.pass = tv < 0.01;
    c.detail = "total variation " + detail::num(tv) + " at t=0.5, bound 0.01";
    return c;
}

// 5. Closed-form fiber q-integral against the explicit sphere sum.
inline Criterion accept_fiber_q_integral(std::uint64_t) {
    Criterion c{"fiber-q-integral", true, ""};
    ScaleFunction phi = ScaleFunction::power(1.5);
    AtomicSpace sp = AtomicSpace::lattice_z1(8, phi);
    AuxSpace aux(sp);
    int x = sp.center();
    double phi_D = phi.evaluate(aux.D(x));
    double worst = 0.0, lo = 1e300, hi = 0.0;
    for (double t : detail::geom_grid(1e-3 * phi_D, phi_D, 50)) {
        double closed = fiber_q_integral(aux, x, t);
        double sum = fiber_q_integral_sphere_sum(aux, x, t);
        worst = std::max(worst, std::abs(closed - sum) / closed);
        lo = std::min(lo, closed);
        hi = std::max(hi, closed);
    }
    if (worst > 1e-12 || lo < 1.0 - 1e-12 || hi > 3.0) c.pass = false;
    for (double t : {phi_D, 2.0 * phi_D, 10.0 * phi_D}) {
        double closed = fiber_q_integral(aux, x, t);
        double direct = aux.mu(x) * q_kernel(sp, t, x, x);
        if (std::abs(closed - direct) > 1e-12 * closed) c.pass = false;
    }
    c.detail = "worst relative gap " + detail::num(worst) + ", range [" + detail::num(lo) + ", " +
               detail::num(hi) + "] in [1,3]";
    return c;
}

// 6. a(t, infinity, D) - 1 <= e^{-s}/s, strict, on a 200-point grid.
inline Criterion accept_series_bound(std::uint64_t) {
    Criterion c{"series-bound", true, ""};
    ScaleFunction phi = ScaleFunction::power(1.5);
    double worst = 0.0;
    auto grid = detail::geom_grid(1e-4, 10.0, 200);
    for (double s : grid) {
        double a = a_series_limit(s, 1.0, phi).value; // phi(1)=1 so s = t
        double bound = std::exp(-s) / s;
        worst = std::max(worst, (a - 1.0) / bound);
        if (!(a - 1.0 < bound)) c.pass = false;
    }
    c.detail = "max (a-1)/(e^{-s}/s) = " + detail::num(worst) + " over " +
               std::to_string(grid.size()) + " grid points";
    return c;
}

// 7. V^(z0, phi^{-1}(t))/mu(x) e^{-s}/s bounded by one constant over the
// (t, D_x) grid, stable under grid refinement.
inline Criterion accept_ratio_bound(std::uint64_t) {
    Criterion c{"ratio-bound", true, ""};
    ScaleFunction phi = ScaleFunction::power(1.5);
    auto scan = [&](int per_decade) {
        double C = 0.0;
        for (double spacing : {0.5, 1.0, 2.0, 4.0}) {
            AtomicSpace sp = AtomicSpace::lattice_z1(8, phi, 1.0, spacing);
            AuxSpace aux(sp);
            int x = sp.center();
            double phi_D = phi.evaluate(aux.D(x));
            for (double s : log_grid(1e-3, 1e3, per_decade)) {
                double t = s * phi_D;
                double ratio = aux_model_volume(aux, x, phi.invert(t)) / aux.mu(x) *
                               std::exp(-s) / s;
                C = std::max(C, ratio);
            }
        }
        return C;
    };
    double C1 = scan(16), C2 = scan(32);
    double drift = std::abs(C2 - C1) / C1;
    c.pass = std::isfinite(C1) && C1 > 0 && drift < 0.05;
    c.detail = "C = " + detail::num(C1) + ", refinement drift " + detail::num(drift);
    return c;
}

// 8. Volume-growth transfer: base passes VD and QRVD but fails RVD below
// the atom scale; the auxiliary space passes RVD outright.
inline Criterion accept_volume_transfer(std::uint64_t) {
    Criterion c{"volume-transfer", true, ""};
    ScaleFunction phi = ScaleFunction::power(1.5);
    AtomicSpace sp = AtomicSpace::lattice_z1(64, phi);
    AuxSpace aux(sp);
    auto radii = default_radius_grid(sp);
    auto D = [&sp](int x) { return sp.isolation_radius(x); };
    std::vector<double> ells = {2.0, 3.0, 4.0};

    CheckReport vd = check_vd(sp, base_volume_fn(sp), radii);
    bool vd_ok = std::abs(vd.constants["C_VD"] - 3.0) < 1e-12;
    CheckReport qrvd = check_qrvd_rvd(sp, base_volume_fn(sp), radii, {2.0}, true, D);
    bool qrvd_ok = qrvd.pass && qrvd.constants["c"] >= 5.0 / 3.0 - 1e-12;
    CheckReport rvd_base = check_qrvd_rvd(sp, base_volume_fn(sp), radii, ells, false, D);
    bool rvd_base_fails = !rvd_base.pass;
    CheckReport vd_aux = check_vd(sp, aux_volume_fn(aux), radii);
    CheckReport rvd_aux = check_qrvd_rvd(sp, aux_volume_fn(aux), radii, ells, false, D);
    bool aux_ok = vd_aux.pass && rvd_aux.pass && rvd_aux.constants["c"] > 1.0;
    bool grid_below_D = radii.front() < sp.min_isolation();

    c.pass = vd_ok && qrvd_ok && rvd_base_fails && aux_ok && grid_below_D;
    c.detail = "base C_VD=" + detail::num(vd.constants["C_VD"]) + ", QRVD c=" +
               detail::num(qrvd.constants["c"]) + ", base RVD " +
               (rvd_base_fails ? "fails" : "passes") + ", aux RVD (l=" +
               detail::num(rvd_aux.constants["ell"]) + ", c=" + detail::num(rvd_aux.constants["c"]) + ")";
    return c;
}

// 9. On-fiber jump kernel: 4^m/(mu phi(D)) against 1/(V^ phi) on random pairs.
inline Criterion accept_jump_two_form(std::uint64_t seed) {
    Criterion c{"jump-two-form", true, ""};
    ScaleFunction phi = ScaleFunction::power(1.5);
    AtomicSpace sp = AtomicSpace::lattice_z1(8, phi, 1.0, 0.7, 2.3);
    AuxSpace aux(sp);
    RngStream rng(seed, "two-form");
    double worst = 0.0;
    int tested = 0;
    while (tested < 10000) {
        int x = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(sp.size()));
        AuxPoint z{x, LazyWord(rng.raw())}, w{x, LazyWord(rng.raw())};
        int m = disagreement_index(z.word, w.word, aux.max_depth());
        if (m == 0) continue;
        ++tested;
        double direct = aux.on_fiber_jump(x, m);
        double d = aux.distance(z, w);
        double via_volume = 1.0 / (aux_model_volume(aux, x, d) * phi.evaluate(d));
        worst = std::max(worst, std::abs(direct - via_volume) / direct);
    }
    c.pass = worst < 1e-12;
    c.detail = "worst relative difference " + detail::num(worst) + " over 10^4 pairs";
    return c;
}

// 10. Small-scale Poincare inequality on fiber balls.
inline Criterion accept_fiber_poincare(std::uint64_t) {
    Criterion c{"fiber-poincare", true, ""};
    ScaleFunction phi = ScaleFunction::power(1.5);
    AtomicSpace sp = AtomicSpace::lattice_z1(8, phi);
    AuxSpace aux(sp);
    int x = sp.center();
    double D = aux.D(x);
    double worst = 0.0;
    for (double r : {D, 0.7 * D, 0.3 * D})
        for (int K = 1; K <= 10; ++K) {
            PoincareResult res = wx_poincare(aux, x, r, K);
            worst = std::max(worst, res.lambda_max / res.bound);
            if (res.lambda_max > res.bound * (1.0 + 1e-10)) c.pass = false;
        }
    c.detail = "max lambda/(phi(r)/2) = " + detail::num(worst) + " over r grid, K <= 10";
    return c;
}

// 11. HK boundedness: p/q extrema finite and window-stable; cross-fiber
// q^ equality as an exactness assert.
inline Criterion accept_hk_boundedness(std::uint64_t seed) {
    Criterion c{"hk-boundedness", true, ""};
    ScaleFunction phi = ScaleFunction::power(1.5);
    auto times = log_grid(1e-3, 1.0, 3); // 10 points over 3 decades
    auto scan = [&](int window) {
        AtomicSpace sp = AtomicSpace::lattice_z1(window, phi);
        std::vector<int> inner;
        for (int x = 0; x < sp.size(); ++x)
            if (sp.dist(x, sp.center()) <= 8.0) inner.push_back(x);
        return check_hk_uhkd(sp, times, inner, 1e-10, 1e-3);
    };
    CheckReport small = scan(128);
    CheckReport big = scan(256);
    double drift_sup = std::abs(big.constants["C_HK"] - small.constants["C_HK"]) / small.constants["C_HK"];
    double drift_inf = std::abs(big.constants["c_HK"] - small.constants["c_HK"]) / small.constants["c_HK"];
    bool bounded = small.pass && big.pass;
    bool stable = drift_sup < 0.2 && drift_inf < 0.2;

    // cross-fiber q^ equals the base q, exactly
    AtomicSpace sp = AtomicSpace::lattice_z1(128, phi);
    AuxSpace aux(sp);
    RngStream rng(seed, "hk-qhat");
    double worst_q = 0.0;
    for (int i = 0; i < 1000; ++i) {
        int x = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(sp.size()));
        int y = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(sp.size()));
        if (x == y) continue;
        double t = times[i % times.size()];
        AuxPoint z1{x, LazyWord(rng.raw())}, z2{y, LazyWord(rng.raw())};
        double qh = aux_q_kernel(aux, t, z1, z2);
        double qb = q_kernel(sp, t, x, y);
        worst_q = std::max(worst_q, std::abs(qh - qb) / qb);
    }
    c.pass = bounded && stable && worst_q < 1e-12;
    c.detail = "p/q in [" + detail::num(small.constants["c_HK"]) + ", " +
               detail::num(small.constants["C_HK"]) + "], drift (inf " + detail::num(drift_inf) +
               ", sup " + detail::num(drift_sup) + "), q^ gap " + detail::num(worst_q);
    return c;
}

inline std::vector<Criterion> run_acceptance(std::uint64_t seed, std::ostream* progress = nullptr) {
    std::vector<std::pair<const char*, Criterion (*)(std::uint64_t)>> fns = {
        {"cell-law", accept_cell_law},
        {"escape-time", accept_escape_time},
        {"chapman-kolmogorov", accept_chapman_kolmogorov},
        {"coupling", accept_coupling},
        {"fiber-q-integral", accept_fiber_q_integral},
        {"series-bound", accept_series_bound},
        {"ratio-bound", accept_ratio_bound},
        {"volume-transfer", accept_volume_transfer},
        {"jump-two-form", accept_jump_two_form},
        {"fiber-poincare", accept_fiber_poincare},
        {"hk-boundedness", accept_hk_boundedness}};
    std::vector<Criterion> out;
    int k = 1;
    for (auto [name, fn] : fns) {
        Criterion c;
        try {
            c = fn(seed);
        } catch (const std::exception& e) {
            c = Criterion{name, false, std::string("exception: ") + e.what()};
        }
        if (progress)
            (*progress) << k << ". " << c.name << ": " << (c.pass ? "PASS" : "FAIL") << " ("
                        << c.detail << ")" << std::endl;
        out.push_back(std::move(c));
        ++k;
    }
    return out;
}

} // namespace auxheat
