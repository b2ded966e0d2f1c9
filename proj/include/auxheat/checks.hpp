#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "aux_space.hpp"
#include "common.hpp"
#include "kernels.hpp"
#include "rng.hpp"
#include "simulate.hpp"
#include "space.hpp"

namespace auxheat {

// Every constant below is an extremum over the declared grid only: a lower
// bound on the true sup, an upper bound on the true inf.
struct CheckReport {
    std::string condition;
    std::map<std::string, double> constants;
    std::string grid = "empirical over sampled grid";
    bool pass = true;
    std::string worst; // witness attaining the extreme
    std::vector<std::string> notes;
};

inline std::vector<double> log_grid(double lo, double hi, int per_decade = 16) {
    if (!(lo > 0) || !(hi > lo)) throw config_error("log grid needs 0 < lo < hi");
    std::vector<double> g;
    double step = std::pow(10.0, 1.0 / per_decade);
    for (double r = lo; r <= hi * (1.0 + 1e-12); r *= step) g.push_back(std::min(r, hi));
    if (g.back() < hi * (1.0 - 1e-12)) g.push_back(hi);
    return g;
}

inline std::vector<double> default_radius_grid(const AtomicSpace& s, int per_decade = 16) {
    return log_grid(0.05 * s.min_isolation(), s.window_radius() / 4.0, per_decade);
}

inline std::vector<double> default_time_grid(const AtomicSpace& s, int per_decade = 16) {
    double phi_D = s.phi().evaluate(s.min_isolation());
    return log_grid(1e-3 * phi_D, 1e2 * phi_D, per_decade);
}

// volume as a function of (base point, radius): base spaces use the window
// volume, auxiliary spaces the two-branch formula
using VolumeFn = std::function<double(int, double)>;

inline VolumeFn base_volume_fn(const AtomicSpace& s) {
    return [&s](int x, double r) { return s.volume(x, r); };
}

inline VolumeFn aux_volume_fn(const AuxSpace& aux) {
    return [&aux](int x, double r) {
        if (r >= aux.D(x)) return aux.base().volume(x, r);
        return aux.mu(x) * tilde_volume(r, aux.D(x), aux.phi());
    };
}

inline bool radius_fits(const AtomicSpace& s, int x, double r) {
    return s.dist(x, s.center()) + r <= s.window_radius();
}

inline CheckReport check_vd(const AtomicSpace& s, const VolumeFn& vol,
                            const std::vector<double>& radii) {
    CheckReport rep;
    rep.condition = "VD";
    double best = 0.0;
    for (int x = 0; x < s.size(); ++x)
        for (double r : radii) {
            if (!radius_fits(s, x, 2.0 * r)) continue;
            double ratio = vol(x, 2.0 * r) / vol(x, r);
            if (ratio > best) {
                best = ratio;
                rep.worst = "x=" + s.label(x) + " r=" + std::to_string(r);
            }
        }
    rep.constants["C_VD"] = best;
    rep.pass = std::isfinite(best) && best > 0;
    return rep;
}

// reverse volume doubling: best (l, c) with c > 1; QRVD restricts to
// radii r >= D_x, RVD scans all radii
inline CheckReport check_qrvd_rvd(const AtomicSpace& s, const VolumeFn& vol,
                                  const std::vector<double>& radii,
                                  const std::vector<double>& ell_candidates, bool restrict_above_D,
                                  const std::function<double(int)>& D) {
    CheckReport rep;
    rep.condition = restrict_above_D ? "QRVD" : "RVD";
    double best_c = 0.0, best_ell = 0.0;
    std::string best_worst;
    for (double ell : ell_candidates) {
        double c = std::numeric_limits<double>::infinity();
        std::string worst;
        bool any = false;
        for (int x = 0; x < s.size(); ++x)
            for (double r : radii) {
                if (restrict_above_D && r < D(x)) continue;
                if (!radius_fits(s, x, ell * r)) continue;
                any = true;
                double ratio = vol(x, ell * r) / vol(x, r);
                if (ratio < c) {
                    c = ratio;
                    worst = "x=" + s.label(x) + " r=" + std::to_string(r);
                }
            }
        if (any && c > best_c) {
            best_c = c;
            best_ell = ell;
            best_worst = worst;
        }
    }
    rep.constants["ell"] = best_ell;
    rep.constants["c"] = best_c;
    rep.worst = best_worst;
    rep.pass = best_c > 1.0;
    if (!rep.pass) rep.notes.push_back("no sampled (ell, c) with c > 1");
    return rep;
}

// smallest sampled C with B(x, Cr) \ B(x, r) non-empty for all x, r >= D_x;
// pairs whose ball already covers the window are skipped
inline CheckReport check_quasi_uniform_perfectness(const AtomicSpace& s,
                                                   const std::vector<double>& radii,
                                                   const std::vector<double>& C_candidates) {
    CheckReport rep;
    rep.condition = "quasi-uniform perfectness";
    double bestC = 0.0;
    int skipped = 0;
    for (double C : C_candidates) {
        bool ok = true;
        std::string worst;
        for (int x = 0; x < s.size() && ok; ++x)
            for (double r : radii) {
                if (r < s.isolation_radius(x)) continue;
                if (!radius_fits(s, x, C * r)) continue;
                auto inner = s.ball(x, r);
                if (static_cast<int>(inner.size()) == s.size()) {
                    ++skipped;
                    continue;
                }
                auto outer = s.ball(x, C * r);
                if (outer.size() <= inner.size()) {
                    ok = false;
                    worst = "x=" + s.label(x) + " r=" + std::to_string(r);
                    break;
                }
            }
        if (ok) {
            bestC = C;
            break;
        }
        rep.worst = worst;
    }
    rep.constants["C"] = bestC;
    rep.pass = bestC > 0.0;
    if (skipped > 0) rep.notes.push_back("skipped " + std::to_string(skipped) + " full-window balls");
    return rep;
}

// (inf, sup) of J(x,y) V(x, d) phi(d) over sampled base pairs
inline CheckReport check_jphi(const AtomicSpace& s, int max_pairs = 100000) {
    CheckReport rep;
    rep.condition = "J_phi";
    double inf = std::numeric_limits<double>::infinity(), sup = 0.0;
    long long stride = std::max<long long>(1, static_cast<long long>(s.size()) * s.size() / max_pairs);
    long long idx = 0;
    for (int x = 0; x < s.size(); ++x)
        for (int y = 0; y < s.size(); ++y) {
            if (x == y || (idx++ % stride) != 0) continue;
            double d = s.dist(x, y);
            double prod = s.jump_rate(x, y) * s.model_volume(x, d) * s.phi().evaluate(d);
            if (prod < inf) {
                inf = prod;
                rep.worst = "x=" + s.label(x) + " y=" + s.label(y);
            }
            sup = std::max(sup, prod);
        }
    rep.constants["c"] = inf;
    rep.constants["C"] = sup;
    rep.pass = inf > 0 && std::isfinite(sup);
    return rep;
}

// the same product on the auxiliary space, over cross-fiber pairs and
// random on-fiber pairs
inline CheckReport check_jphi_aux(const AuxSpace& aux, RngStream& rng, int fiber_pairs = 1000) {
    CheckReport rep;
    rep.condition = "J_phi (auxiliary)";
    double inf = std::numeric_limits<double>::infinity(), sup = 0.0;
    const AtomicSpace& s = aux.base();
    for (int x = 0; x < s.size(); ++x)
        for (int y = 0; y < s.size(); ++y) {
            if (x == y) continue;
            double d = s.dist(x, y);
            double prod = s.jump_rate(x, y) * aux_model_volume(aux, x, d) * s.phi().evaluate(d);
            inf = std::min(inf, prod);
            sup = std::max(sup, prod);
        }
    for (int i = 0; i < fiber_pairs; ++i) {
        int x = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(s.size()));
        AuxPoint z{x, LazyWord(rng.raw())};
        AuxPoint w{x, LazyWord(rng.raw())};
        double d = aux.distance(z, w);
        if (d == 0.0) continue;
        double prod = aux.jump_kernel(z, w) * aux_model_volume(aux, x, d) * aux.phi().evaluate(d);
        inf = std::min(inf, prod);
        sup = std::max(sup, prod);
    }
    rep.constants["c"] = inf;
    rep.constants["C"] = sup;
    rep.pass = inf > 0 && std::isfinite(sup);
    return rep;
}

// best C with J(x,y) <= C/V(x,r) * sum_{z in B(x,r)} J(z,y) mu(z), r <= d/2
inline CheckReport check_ujs(const AtomicSpace& s, const std::vector<double>& radii,
                             int max_pairs = 20000) {
    CheckReport rep;
    rep.condition = "UJS";
    double best = 0.0;
    bool unbounded = false;
    long long stride = std::max<long long>(1, static_cast<long long>(s.size()) * s.size() / max_pairs);
    long long idx = 0;
    for (int x = 0; x < s.size(); ++x)
        for (int y = 0; y < s.size(); ++y) {
            if (x == y || (idx++ % stride) != 0) continue;
            double d = s.dist(x, y);
            for (double r : radii) {
                if (r > d / 2.0 || !radius_fits(s, x, r)) continue;
                double avg = 0.0;
                for (int z : s.ball(x, r))
                    if (z != y) avg += s.jump_rate(z, y) * s.mu(z);
                double J = s.jump_rate(x, y);
                if (avg <= 0.0) {
                    if (J > 0.0) unbounded = true;
                    continue;
                }
                double C = J * s.volume(x, r) / avg;
                if (C > best) {
                    best = C;
                    rep.worst = "x=" + s.label(x) + " y=" + s.label(y) + " r=" + std::to_string(r);
                }
            }
        }
    rep.constants["C"] = unbounded ? std::numeric_limits<double>::infinity() : best;
    rep.pass = !unbounded && best > 0;
    if (unbounded) rep.notes.push_back("zero average rate against a positive jump rate");
    return rep;
}

struct ExitStat {
    double r = 0.0;
    double mean = 0.0;
    double half3 = 0.0; // 3 sigma half-width of the mean
};

inline ExitStat exit_stats(const std::function<double(RngStream&)>& draw, double r, int n,
                           RngStream& rng) {
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = draw(rng);
        sum += x;
        sum2 += x * x;
    }
    double mean = sum / n;
    double var = std::max(0.0, sum2 / n - mean * mean);
    return ExitStat{r, mean, 3.0 * std::sqrt(var / n)};
}

// Monte Carlo mean exit times against phi(r): (c, C) extrema of mean/phi(r)
inline CheckReport check_qe(const AtomicSpace& s, const JumpTable& table,
                            const std::vector<double>& radii, int samples, RngStream& rng) {
    CheckReport rep;
    rep.condition = "QE";
    double inf = std::numeric_limits<double>::infinity(), sup = 0.0;
    int x0 = s.center();
    double D = s.isolation_radius(x0);
    bool any = false;
    for (double r : radii) {
        if (r < D || !radius_fits(s, x0, r)) continue;
        any = true;
        auto st = exit_stats([&](RngStream& g) { return exit_time_base(table, x0, r, g); }, r,
                             samples, rng);
        if (st.half3 > 0.3 * st.mean)
            throw certification_error("exit-time mean too noisy at r=" + std::to_string(r),
                                      st.half3 / st.mean);
        double ratio = st.mean / s.phi().evaluate(r);
        if (ratio < inf) {
            inf = ratio;
            rep.worst = "r=" + std::to_string(r);
        }
        sup = std::max(sup, ratio);
    }
    rep.constants["c"] = inf;
    rep.constants["C"] = sup;
    rep.pass = any && inf > 0 && std::isfinite(sup);
    return rep;
}

inline CheckReport check_qe_aux(const AuxSpace& aux, const JumpTable& table,
                                const std::vector<double>& radii, int samples, RngStream& rng) {
    CheckReport rep;
    rep.condition = "QE (auxiliary)";
    double inf = std::numeric_limits<double>::infinity(), sup = 0.0;
    const AtomicSpace& s = aux.base();
    int x0 = s.center();
    AuxPoint z0{x0, LazyWord(rng.raw())};
    for (double r : radii) {
        if (r >= aux.D(x0) && !radius_fits(s, x0, r)) continue;
        auto st = exit_stats([&](RngStream& g) { return exit_time_aux(aux, table, z0, r, g); },
                             r, samples, rng);
        if (st.half3 > 0.3 * st.mean)
            throw certification_error("exit-time mean too noisy at r=" + std::to_string(r),
                                      st.half3 / st.mean);
        double ratio = st.mean / s.phi().evaluate(r);
        inf = std::min(inf, ratio);
        sup = std::max(sup, ratio);
    }
    rep.constants["c"] = inf;
    rep.constants["C"] = sup;
    rep.pass = inf > 0 && std::isfinite(sup);
    return rep;
}

// HK: (inf, sup) of p/q on the inner window; UHKD: sup of p(t,x,x) V;
// reported per time grid over the given inner points
inline CheckReport check_hk_uhkd(const AtomicSpace& s, const std::vector<double>& times,
                                 const std::vector<int>& inner, double kernel_tol = 1e-10,
                                 double leak_cap = 1e-3) {
    CheckReport rep;
    rep.condition = "HK/UHKD";
    double inf = std::numeric_limits<double>::infinity(), sup = 0.0, uhkd = 0.0;
    for (double t : times) {
        HeatKernel p = heat_kernel_exact(s, t, kernel_tol);
        double leak = 0.0;
        for (int x : inner) leak = std::max(leak, p.leak(x));
        if (leak > leak_cap)
            throw window_overflow_error("window leak " + std::to_string(leak) +
                                            " exceeds the cap at t=" + std::to_string(t),
                                        leak);
        for (int x : inner) {
            uhkd = std::max(uhkd, p.density(x, x) * s.model_volume(x, s.phi().invert(t)));
            for (int y : inner) {
                double ratio = p.density(x, y) / q_kernel(s, t, x, y);
                if (ratio < inf) {
                    inf = ratio;
                    rep.worst = "t=" + std::to_string(t) + " x=" + s.label(x) + " y=" + s.label(y);
                }
                sup = std::max(sup, ratio);
            }
        }
    }
    rep.constants["c_HK"] = inf;
    rep.constants["C_HK"] = sup;
    rep.constants["C_UHKD"] = uhkd;
    rep.pass = inf > 0 && std::isfinite(sup);
    return rep;
}

// NDL: inf of p^B(t,x,y) V(x0, phi^{-1}(t)) over x,y near x0, t <= phi(eps r)
inline CheckReport check_ndl(const AtomicSpace& s, const std::vector<double>& radii,
                             const std::vector<double>& times, double eps = 0.25,
                             double kernel_tol = 1e-10) {
    CheckReport rep;
    rep.condition = "NDL";
    double inf = std::numeric_limits<double>::infinity();
    int x0 = s.center();
    bool any = false;
    for (double r : radii) {
        if (!radius_fits(s, x0, r)) continue;
        auto B = s.ball(x0, r);
        for (double t : times) {
            if (t > s.phi().evaluate(eps * r)) continue;
            double rc = eps * s.phi().invert(t);
            std::vector<int> near;
            for (int x : B)
                if (s.dist(x0, x) < rc) near.push_back(x);
            if (near.empty()) continue;
            DirichletKernel pb = dirichlet_kernel(s, B, t, kernel_tol);
            double V = s.model_volume(x0, s.phi().invert(t));
            for (int x : near)
                for (int y : near) {
                    any = true;
                    double val = pb.density(x, y) * V;
                    if (val < inf) {
                        inf = val;
                        rep.worst = "r=" + std::to_string(r) + " t=" + std::to_string(t) +
                                    " x=" + s.label(x) + " y=" + s.label(y);
                    }
                }
        }
    }
    rep.constants["c_NDL"] = any ? inf : 0.0;
    rep.pass = any && inf > 0;
    return rep;
}

// Small-scale Poincare on a fiber ball S: largest generalized Rayleigh
// quotient of variance against the jump energy over functions constant on
// the 2^K subcells of S; must stay below phi(r)/2.
struct PoincareResult {
    double lambda_max = 0.0;
    double bound = 0.0; // phi(r)/2
    bool skipped = false;
};

inline PoincareResult wx_poincare(const AuxSpace& aux, int x, double r, int K) {
    PoincareResult res;
    res.bound = aux.phi().evaluate(r) / 2.0;
    if (K < 1) {
        res.skipped = true;
        return res;
    }
    double D = aux.D(x);
    if (!(r <= D)) throw domain_error("fiber Poincare needs r <= D_x");
    int mS = ball_cell_depth(r, D, aux.phi(), aux.max_depth());
    if (mS + K > 62) throw domain_error("subcell depth out of range");
    int n = 1 << K;
    double w = aux.mu(x) * std::exp2(-static_cast<double>(mS + K)); // mass per subcell
    // disagreement index between subcells i and j: mS + (K - common suffix
    // of the K refinement bits) ... computed from the highest differing bit
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            int hb = 63 - __builtin_clzll(static_cast<unsigned long long>(i ^ j));
            int m = mS + K - hb; // first differing bit index within the word
            double c = w * w * aux.on_fiber_jump(x, m);
            L(i, j) = -2.0 * c;
            L(i, i) += 2.0 * c;
        }
    Eigen::MatrixXd A = Eigen::MatrixXd::Constant(n, n, -w / n);
    for (int i = 0; i < n; ++i) A(i, i) += w;
    // restrict to the mean-zero subspace
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n - 1);
    for (int k = 0; k < n - 1; ++k) {
        // orthonormal basis of 1^perp (Helmert)
        double norm = std::sqrt(static_cast<double>(k + 1) * (k + 2));
        for (int i = 0; i <= k; ++i) Q(i, k) = 1.0 / norm;
        Q(k + 1, k) = -static_cast<double>(k + 1) / norm;
    }
    Eigen::MatrixXd Ar = Q.transpose() * A * Q;
    Eigen::MatrixXd Lr = Q.transpose() * L * Q;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ar, Lr);
    res.lambda_max = es.eigenvalues().maxCoeff();
    return res;
}

inline CheckReport check_wx_poincare(const AuxSpace& aux, int x, const std::vector<double>& radii,
                                     int max_K) {
    CheckReport rep;
    rep.condition = "fiber Poincare";
    double worst_margin = 0.0;
    for (double r : radii)
        for (int K = 1; K <= max_K; ++K) {
            PoincareResult res = wx_poincare(aux, x, r, K);
            if (res.skipped) continue;
            double margin = res.lambda_max / res.bound;
            if (margin > worst_margin) {
                worst_margin = margin;
                rep.worst = "r=" + std::to_string(r) + " K=" + std::to_string(K);
            }
            if (res.lambda_max > res.bound * (1.0 + 1e-10)) rep.pass = false;
        }
    rep.constants["max lambda/(phi(r)/2)"] = worst_margin;
    return rep;
}

} // namespace auxheat
