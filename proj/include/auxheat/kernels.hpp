#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "aux_space.hpp"
#include "common.hpp"
#include "space.hpp"
#include "ultra.hpp"

namespace auxheat {

// CTMC generator on the window: off-diagonal J(x,y) mu(y), diagonal -v(x)
// with the full rate (rows sum to minus the leak rate beyond the window).
inline Eigen::MatrixXd generator_matrix(const AtomicSpace& s) {
    int n = s.size();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y)
            if (y != x) G(x, y) = s.row_rate(x, y);
        G(x, x) = -s.rate_v(x);
    }
    return G;
}

namespace detail {

// exp(G) for a generator with uniformization rate lam (diagonal shifted so
// that P = I + G/lam is substochastic); certified entrywise tolerance
inline Eigen::MatrixXd uniformized_exp(const Eigen::MatrixXd& G, double lam, double tol) {
    int n = static_cast<int>(G.rows());
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) + G / lam;
    double w = std::exp(-lam);
    double covered = w;
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd S = w * V;
    for (int k = 1; covered < 1.0 - tol; ++k) {
        V = V * P;
        w *= lam / k;
        S += w * V;
        covered += w;
        if (k > 100000) throw certification_error("uniformization did not converge", 1.0 - covered);
    }
    return S;
}

} // namespace detail

// exp(tG) with entrywise absolute error below tol; uniformization, with
// squaring when the uniformization horizon is too long for one pass.
inline Eigen::MatrixXd generator_exp(const Eigen::MatrixXd& G, double t, double tol) {
    if (!(t > 0)) throw domain_error("heat kernel time must be positive");
    if (!(tol > 0)) throw domain_error("heat kernel tolerance must be positive");
    double lam = 0.0;
    for (int x = 0; x < G.rows(); ++x) lam = std::max(lam, -G(x, x));
    if (lam == 0.0) return Eigen::MatrixXd::Identity(G.rows(), G.cols());
    int squarings = 0;
    double lt = lam * t;
    while (lt > 256.0) {
        lt *= 0.5;
        ++squarings;
    }
    // substochastic matrices have sup-norm <= 1, so each squaring at most
    // doubles the entrywise error
    double inner = tol / std::exp2(static_cast<double>(squarings));
    if (inner < 1e-15)
        throw certification_error("heat kernel: tolerance unachievable at this horizon", inner);
    Eigen::MatrixXd E =
        detail::uniformized_exp(G * (t / std::exp2(static_cast<double>(squarings))), lt, inner);
    for (int i = 0; i < squarings; ++i) E = E * E;
    return E;
}

// Heat kernel on the window as a density with respect to mu; substochastic,
// the missing row mass is the window leak.
struct HeatKernel {
    const AtomicSpace* space = nullptr;
    double t = 0.0;
    double tol = 0.0;
    Eigen::MatrixXd trans; // transition probabilities

    double density(int x, int y) const { return trans(x, y) / space->mu(y); }
    double leak(int x) const { return std::max(0.0, 1.0 - trans.row(x).sum()); }
    double max_leak() const {
        double m = 0.0;
        for (int x = 0; x < trans.rows(); ++x) m = std::max(m, leak(x));
        return m;
    }
};

inline HeatKernel heat_kernel_exact(const AtomicSpace& s, double t, double tol = 1e-10) {
    return HeatKernel{&s, t, tol, generator_exp(generator_matrix(s), t, tol)};
}

// Heat kernel of the process killed on exiting the point set B: exponential
// of the sub-generator (rows keep the full diagonal -v(x)).
struct DirichletKernel {
    const AtomicSpace* space = nullptr;
    std::vector<int> points; // window indices of B
    double t = 0.0;
    double tol = 0.0;
    Eigen::MatrixXd trans;

    int local(int x) const {
        for (std::size_t i = 0; i < points.size(); ++i)
            if (points[i] == x) return static_cast<int>(i);
        throw domain_error("point not in the Dirichlet domain");
    }
    double density(int x, int y) const { return trans(local(x), local(y)) / space->mu(y); }
};

inline DirichletKernel dirichlet_kernel(const AtomicSpace& s, const std::vector<int>& B,
                                        double t, double tol = 1e-10) {
    int m = static_cast<int>(B.size());
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j)
            if (j != i) G(i, j) = s.row_rate(B[static_cast<std::size_t>(i)], B[static_cast<std::size_t>(j)]);
        G(i, i) = -s.rate_v(B[static_cast<std::size_t>(i)]);
    }
    return DirichletKernel{&s, B, t, tol, generator_exp(G, t, tol)};
}

// The series a(t, m, D) of the on-fiber heat kernel correction.
struct ASeries {
    double t = 0.0;
    double D = 0.0;
    int m = -1; // -1 means the limit m -> infinity
    double value = 0.0;
    double truncation_bound = 0.0; // zero for finite m (closed form)
};

inline ASeries a_series(double t, int m, double D, const ScaleFunction& f) {
    if (t < 0) throw domain_error("a-series: negative time");
    if (m < 1) throw domain_error("a-series: m must be at least 1");
    double s = t / f.evaluate(D);
    double a = 1.0;
    for (int j = 1; j < m; ++j)
        a += std::exp2(static_cast<double>(j - 1)) * std::exp(-(3.0 * std::exp2(static_cast<double>(j)) - 2.0) * s);
    a -= std::exp2(static_cast<double>(m - 1)) * std::exp(-(3.0 * std::exp2(static_cast<double>(m)) - 2.0) * s);
    return ASeries{t, D, m, a, 0.0};
}

inline ASeries a_series_limit(double t, double D, const ScaleFunction& f, double tol = 1e-14) {
    if (!(t > 0)) throw domain_error("a-series limit diverges at t = 0");
    double s = t / f.evaluate(D);
    double a = 1.0;
    double bound = 0.0;
    for (int j = 1;; ++j) {
        double term = std::exp2(static_cast<double>(j - 1)) *
                      std::exp(-(3.0 * std::exp2(static_cast<double>(j)) - 2.0) * s);
        a += term;
        // geometric envelope for the remaining terms: the ratio of
        // consecutive terms is 2 exp(-3*2^j s), decreasing in j
        double q = 2.0 * std::exp(-3.0 * std::exp2(static_cast<double>(j + 1)) * s);
        if (q < 1.0) {
            double next = term * 2.0 * std::exp(-3.0 * std::exp2(static_cast<double>(j)) * s);
            bound = next / (1.0 - q);
            if (term < 1e-16 * a && bound < tol * a) break;
        }
        if (j > 4096) throw certification_error("a-series limit did not converge", bound);
    }
    return ASeries{t, D, -1, a, bound};
}

// On-fiber heat kernel value at sphere index m (m = -1 for the diagonal):
// p(t,x,x) + e^{-v(x)t}/mu(x) * (a(t, m, D_x) - 1)
inline double aux_heat_fiber_value(double p_xx, double v, double mu, double t, int m, double D,
                                   const ScaleFunction& f) {
    ASeries a = m < 0 ? a_series_limit(t, D, f) : a_series(t, m, D, f);
    return p_xx + std::exp(-v * t) / mu * (a.value - 1.0);
}

// Auxiliary heat kernel (density w.r.t. the auxiliary measure).
inline double aux_heat_kernel(const AuxSpace& aux, const HeatKernel& p, const AuxPoint& z,
                              const AuxPoint& w) {
    if (z.x != w.x) return p.density(z.x, w.x);
    int m = disagreement_index(z.word, w.word, aux.max_depth());
    return aux_heat_fiber_value(p.density(z.x, z.x), aux.base().rate_v(z.x), aux.mu(z.x), p.t,
                                m == 0 ? -1 : m, aux.D(z.x), aux.phi());
}

// Comparison profile q(t,x,y) = 1/V(x, phi^{-1}(t)) ^ t/(V(x,d) phi(d)).
inline double q_kernel(const AtomicSpace& s, double t, int x, int y) {
    if (!(t > 0)) throw domain_error("q kernel: time must be positive");
    double on_diag = 1.0 / s.model_volume(x, s.phi().invert(t));
    if (x == y) return on_diag;
    double d = s.dist(x, y);
    return std::min(on_diag, t / (s.model_volume(x, d) * s.phi().evaluate(d)));
}

// Volume of the infinite model auxiliary space around a fiber point.
inline double aux_model_volume(const AuxSpace& aux, int x, double r) {
    if (r >= aux.D(x)) return aux.base().model_volume(x, r);
    return aux.mu(x) * tilde_volume(r, aux.D(x), aux.phi());
}

// q^ on the auxiliary space; equals the base q across fibers.
inline double aux_q_kernel(const AuxSpace& aux, double t, const AuxPoint& z, const AuxPoint& w) {
    if (!(t > 0)) throw domain_error("q kernel: time must be positive");
    double on_diag = 1.0 / aux_model_volume(aux, z.x, aux.phi().invert(t));
    double d = aux.distance(z, w);
    if (d == 0.0) return on_diag;
    return std::min(on_diag, t / (aux_model_volume(aux, z.x, d) * aux.phi().evaluate(d)));
}

// closed form of the q^ integral over one fiber, as a function of t
inline double fiber_q_integral(const AuxSpace& aux, int x, double t) {
    if (!(t > 0)) throw domain_error("fiber q integral: time must be positive");
    double phi_D = aux.phi().evaluate(aux.D(x));
    if (t >= phi_D) return aux.mu(x) / aux.base().model_volume(x, aux.phi().invert(t));
    int m0 = floor_log2_guarded(phi_D / t);
    return (2.0 * t / phi_D) * (std::exp2(static_cast<double>(m0)) - 1.0) + 1.0;
}

// the same integral as an explicit sphere sum, for cross-checking
inline double fiber_q_integral_sphere_sum(const AuxSpace& aux, int x, double t) {
    if (!(t > 0)) throw domain_error("fiber q integral: time must be positive");
    double phi_D = aux.phi().evaluate(aux.D(x));
    if (t >= phi_D) return aux.mu(x) / aux.base().model_volume(x, aux.phi().invert(t));
    int m0 = floor_log2_guarded(phi_D / t);
    double sum = 0.0;
    for (int m = 1; m <= m0; ++m) sum += std::exp2(static_cast<double>(m)) * t / phi_D;
    sum += 1.0; // sum over m > m0 of 2^{-m} 2^{m0} telescopes to one
    double tail = 0.0;
    for (int m = m0 + 1; m <= m0 + 60; ++m)
        tail += std::exp2(static_cast<double>(m0 - m));
    return sum - 1.0 + tail + std::exp2(-60.0);
}

// Chapman-Kolmogorov check for the auxiliary kernel.
struct CkResidual {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double truncation_bound = 0.0;
};

namespace detail {

// sum over the sphere decomposition of one fiber of ps(z) pt(z) nu(dz),
// where ps depends on the disagreement index with w0 and pt on the index
// with w1; mstar is the disagreement of w0 and w1 (0 for equal words)
template <class Ps, class Pt>
inline std::pair<double, double> fiber_pair_sum(int mstar, int max_depth, Ps ps, Pt pt) {
    double sum = 0.0;
    if (mstar == 0) {
        for (int m = 1; m <= max_depth; ++m)
            sum += std::exp2(static_cast<double>(-m)) * ps(m) * pt(m);
        double cap = std::abs(ps(-1) * pt(-1));
        return {sum, std::exp2(static_cast<double>(-max_depth)) * (cap + 1.0)};
    }
    for (int m = 1; m < mstar; ++m)
        sum += std::exp2(static_cast<double>(-m)) * ps(m) * pt(m);
    for (int m = mstar + 1; m <= max_depth; ++m)
        sum += std::exp2(static_cast<double>(-m)) * ps(m) * pt(mstar);
    for (int k = mstar + 1; k <= max_depth; ++k)
        sum += std::exp2(static_cast<double>(-k)) * ps(mstar) * pt(k);
    double cap = std::abs(ps(-1) * pt(mstar)) + std::abs(ps(mstar) * pt(-1));
    return {sum, std::exp2(static_cast<double>(-max_depth)) * (cap + 1.0)};
}

} // namespace detail

inline CkResidual chapman_kolmogorov_residual_aux(const AuxSpace& aux, const HeatKernel& ps,
                                                  const HeatKernel& pt, const HeatKernel& pst,
                                                  const AuxPoint& z0, const AuxPoint& z1) {
    const AtomicSpace& base = aux.base();
    const ScaleFunction& f = aux.phi();
    int x0 = z0.x, x1 = z1.x;

    auto fiber_value = [&](const HeatKernel& hk, int x, int m) {
        return aux_heat_fiber_value(hk.density(x, x), base.rate_v(x), aux.mu(x), hk.t, m,
                                    aux.D(x), f);
    };

    double lhs = aux_heat_kernel(aux, pst, z0, z1);
    double rhs = 0.0, bound = 0.0;

    for (int y = 0; y < base.size(); ++y) {
        if (y == x0 || y == x1) continue;
        rhs += base.mu(y) * ps.density(x0, y) * pt.density(y, x1);
    }

    if (x0 == x1) {
        int mstar = disagreement_index(z0.word, z1.word, aux.max_depth());
        auto fs = [&](int m) { return fiber_value(ps, x0, m); };
        auto ft = [&](int m) { return fiber_value(pt, x0, m); };
        auto [sum, b] = detail::fiber_pair_sum(mstar, aux.max_depth(), fs, ft);
        rhs += aux.mu(x0) * sum;
        bound += aux.mu(x0) * b;
    } else {
        // fiber of x0: ps varies over spheres around w0, pt is constant
        auto fs0 = [&](int m) { return fiber_value(ps, x0, m); };
        auto c0 = [&](int) { return pt.density(x0, x1); };
        auto [s0, b0] = detail::fiber_pair_sum(0, aux.max_depth(), fs0, c0);
        rhs += aux.mu(x0) * s0;
        bound += aux.mu(x0) * b0;
        // fiber of x1: ps is constant, pt varies over spheres around w1
        auto c1 = [&](int) { return ps.density(x0, x1); };
        auto ft1 = [&](int m) { return fiber_value(pt, x1, m); };
        auto [s1, b1] = detail::fiber_pair_sum(0, aux.max_depth(), c1, ft1);
        rhs += aux.mu(x1) * s1;
        bound += aux.mu(x1) * b1;
    }

    return CkResidual{lhs, rhs, std::abs(lhs - rhs), bound};
}

} // namespace auxheat
