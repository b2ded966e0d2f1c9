#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "common.hpp"

namespace auxheat {

// Time-space scale: strictly increasing, phi(0) = 0, phi(1) = 1, with
// power-law growth bounds c1 (R/r)^b1 <= phi(R)/phi(r) <= c2 (R/r)^b2.
class ScaleFunction {
public:
    static ScaleFunction power(double alpha) {
        if (!(alpha > 0)) throw config_error("power-law exponent must be positive");
        ScaleFunction f;
        f.kind_ = Kind::power;
        f.alpha_ = alpha;
        f.beta1_ = f.beta2_ = alpha;
        f.c1_ = f.c2_ = 1.0;
        return f;
    }

    // Tabulated monotone map on a log grid of r. Requires at least 4 samples
    // per octave; inversion is by bisection on the interpolant.
    static ScaleFunction tabulated(std::vector<double> r, std::vector<double> phi,
                                   double beta1, double beta2, double c1, double c2) {
        if (r.size() != phi.size() || r.size() < 2)
            throw config_error("tabulated scale needs matching r/phi samples");
        for (std::size_t i = 1; i < r.size(); ++i) {
            if (!(r[i] > r[i - 1]) || !(phi[i] > phi[i - 1]))
                throw config_error("tabulated scale samples must be strictly increasing");
            if (!(r[i] / r[i - 1] <= std::pow(2.0, 0.2500001)))
                throw config_error("tabulated scale needs at least 4 samples per octave");
        }
        if (!(r.front() > 0) || !(phi.front() > 0))
            throw config_error("tabulated scale samples must be positive");
        ScaleFunction f;
        f.kind_ = Kind::tabulated;
        f.r_ = std::move(r);
        f.phi_ = std::move(phi);
        f.beta1_ = beta1;
        f.beta2_ = beta2;
        f.c1_ = c1;
        f.c2_ = c2;
        // normalize so phi(1) = 1
        double at1 = f.interp(1.0);
        if (!(at1 > 0)) throw config_error("tabulated scale must cover r = 1");
        for (double& v : f.phi_) v /= at1;
        return f;
    }

    double operator()(double r) const { return evaluate(r); }

    double evaluate(double r) const {
        if (r < 0) throw domain_error("phi: negative radius");
        if (r == 0) return 0.0;
        if (kind_ == Kind::power) return std::pow(r, alpha_);
        return interp(r);
    }

    double invert(double t) const {
        if (t < 0) throw domain_error("phi inverse: negative time");
        if (t == 0) return 0.0;
        if (kind_ == Kind::power) return std::pow(t, 1.0 / alpha_);
        // bracket in log r, extrapolating by the growth exponents if needed
        double lo = r_.front(), hi = r_.back();
        while (interp(lo) > t) lo *= 0.5;
        while (interp(hi) < t) hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
            double mid = 0.5 * (lo + hi);
            (interp(mid) < t ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    double alpha() const { return alpha_; }
    double beta1() const { return beta1_; }
    double beta2() const { return beta2_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }
    bool is_power() const { return kind_ == Kind::power; }

private:
    enum class Kind { power, tabulated };

    // log-log linear interpolation, power-law extrapolation at the ends
    double interp(double r) const {
        const auto& xs = r_;
        const auto& ys = phi_;
        if (r <= xs.front()) {
            double slope = std::log(ys[1] / ys[0]) / std::log(xs[1] / xs[0]);
            return ys.front() * std::pow(r / xs.front(), slope);
        }
        if (r >= xs.back()) {
            std::size_t n = xs.size();
            double slope = std::log(ys[n - 1] / ys[n - 2]) / std::log(xs[n - 1] / xs[n - 2]);
            return ys.back() * std::pow(r / xs.back(), slope);
        }
        auto it = std::upper_bound(xs.begin(), xs.end(), r);
        std::size_t i = static_cast<std::size_t>(it - xs.begin());
        double u = std::log(r / xs[i - 1]) / std::log(xs[i] / xs[i - 1]);
        return ys[i - 1] * std::pow(ys[i] / ys[i - 1], u);
    }

    Kind kind_ = Kind::power;
    double alpha_ = 2.0;
    double beta1_ = 2.0, beta2_ = 2.0, c1_ = 1.0, c2_ = 1.0;
    std::vector<double> r_, phi_;
};

} // namespace auxheat
