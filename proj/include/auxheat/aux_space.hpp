#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"
#include "space.hpp"
#include "ultra.hpp"

namespace auxheat {

// Point of the auxiliary space: base atom plus a word in its fiber.
struct AuxPoint {
    int x = 0;
    LazyWord word;
};

// Ball of the auxiliary space: either a lifted base ball (r >= D_x) or a
// cell within one fiber (r <= D_x).
struct AuxBall {
    bool fiber = false;
    int x = 0;
    double r = 0.0;
    Cell cell; // meaningful when fiber
};

// The auxiliary metric measure space over an atomic base: each atom x is
// replaced by the fiber {x} x W with ultrametric rho^{D_x} and mass
// mu(x) spread by the coin-flipping measure.
class AuxSpace {
public:
    explicit AuxSpace(const AtomicSpace& base, int max_depth = kDefaultMaxDepth)
        : base_(&base), max_depth_(max_depth) {
        D_.reserve(static_cast<std::size_t>(base.size()));
        for (int x = 0; x < base.size(); ++x) D_.push_back(base.isolation_radius(x));
    }

    const AtomicSpace& base() const { return *base_; }
    const ScaleFunction& phi() const { return base_->phi(); }
    int max_depth() const { return max_depth_; }
    double D(int x) const { return D_[static_cast<std::size_t>(x)]; }
    double mu(int x) const { return base_->mu(x); }

    double distance(const AuxPoint& z, const AuxPoint& w) const {
        if (z.x != w.x) return base_->dist(z.x, w.x);
        return rho_distance(z.word, w.word, D(z.x), phi(), max_depth_);
    }

    double volume(const AuxPoint& z, double r) const {
        if (!(r > 0)) throw domain_error("aux volume: radius must be positive");
        if (r >= D(z.x)) return base_->volume(z.x, r);
        return mu(z.x) * tilde_volume(r, D(z.x), phi());
    }

    AuxBall ball(const AuxPoint& z, double r) const {
        if (!(r > 0)) throw domain_error("aux ball: radius must be positive");
        if (r >= D(z.x)) {
            base_->ball(z.x, r); // window check
            return AuxBall{false, z.x, r, Cell{}};
        }
        return AuxBall{true, z.x, r, ball_cell(z.word, r, D(z.x), phi(), max_depth_)};
    }

    double ball_volume(const AuxBall& b) const {
        if (!b.fiber) return base_->volume(b.x, b.r);
        return mu(b.x) * b.cell.measure();
    }

    // J^ in both branches; the on-fiber value 4^m / (mu(x) phi(D_x)) equals
    // 1 / (V^(z, d^) phi(d^))
    double jump_kernel(const AuxPoint& z, const AuxPoint& w) const {
        if (z.x != w.x) return base_->jump_rate(z.x, w.x);
        int m = disagreement_index(z.word, w.word, max_depth_);
        if (m == 0) throw diagonal_error("jump kernel undefined on the fiber diagonal");
        return on_fiber_jump(z.x, m);
    }

    double on_fiber_jump(int x, int m) const {
        return std::exp2(2.0 * m) / (mu(x) * phi().evaluate(D(x)));
    }

    std::string serialize(const AuxPoint& z, int bits = 16) const {
        std::string s = base_->label(z.x) + "@";
        for (int i = 1; i <= bits; ++i) s += static_cast<char>('0' + z.word.bit(i));
        return s;
    }

    std::string serialize(int x, const Cell& c) const {
        return base_->label(x) + ":" + c.to_string();
    }

private:
    const AtomicSpace* base_;
    int max_depth_;
    std::vector<double> D_;
};

} // namespace auxheat
