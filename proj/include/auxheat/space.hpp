#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "common.hpp"
#include "scale.hpp"

namespace auxheat {

// Jump kernel J(x,y) = c / (V(x, d(x,y)) phi(d(x,y))), symmetrized by a
// geometric mean of the two volumes on non-homogeneous spaces.
struct JPhiKernel {
    double c = 1.0;
};

// Explicit symmetric rate matrix, zero diagonal.
struct MatrixKernel {
    std::vector<std::vector<double>> J;
};

using KernelSpec = std::variant<JPhiKernel, MatrixKernel>;

// Certified tail sums: value brackets the true sum within tolerance.
struct TailOracle {
    double tolerance = 1e-10;
    std::size_t max_shells = std::size_t(1) << 22;
};

namespace detail {

// Bracket of integral_a^inf f for decreasing f >= 0: geometric Riemann sums
// on [a, X] plus a certified upper bound for the part beyond X.
template <class F, class TailUpper>
inline std::pair<double, double> integral_bracket(F f, double a, TailUpper tail_upper,
                                                  double growth = 1.005, double span = 16384.0) {
    double lo = 0.0, hi = 0.0;
    double x = a;
    const double X = a * span;
    while (x < X) {
        double xn = std::min(x * growth, X);
        double dx = xn - x;
        hi += f(x) * dx;
        lo += f(xn) * dx;
        x = xn;
    }
    hi += tail_upper(X);
    return {lo, hi};
}

} // namespace detail

// Finite window of a countable metric measure space with isolated atoms.
// Lattice windows carry a tail oracle so that total jump rates account for
// mass outside the window; explicit spaces are complete (no tail).
class AtomicSpace {
public:
    enum class Geometry { z1, z2_euclid, z2_l1, general };

    static AtomicSpace lattice_z1(int radius, const ScaleFunction& phi, double kernel_c = 1.0,
                                  double spacing = 1.0, double mass = 1.0,
                                  double tail_tol = 1e-10) {
        AtomicSpace s;
        s.geometry_ = Geometry::z1;
        s.init_lattice(radius, phi, kernel_c, spacing, mass, tail_tol);
        return s;
    }

    static AtomicSpace lattice_z2(int radius, const ScaleFunction& phi, bool l1_metric,
                                  double kernel_c = 1.0, double spacing = 1.0, double mass = 1.0,
                                  double tail_tol = 1e-10) {
        AtomicSpace s;
        s.geometry_ = l1_metric ? Geometry::z2_l1 : Geometry::z2_euclid;
        s.init_lattice(radius, phi, kernel_c, spacing, mass, tail_tol);
        return s;
    }

    // Complete finite space: coordinates (euclidean or l1) or a distance matrix.
    static AtomicSpace explicit_space(std::vector<std::vector<double>> dist,
                                      std::vector<double> mu, KernelSpec kernel,
                                      const ScaleFunction& phi,
                                      std::vector<std::string> labels = {}) {
        AtomicSpace s;
        s.geometry_ = Geometry::general;
        s.n_ = static_cast<int>(mu.size());
        if (s.n_ < 1) throw config_error("space needs at least one point");
        if (dist.size() != mu.size()) throw config_error("distance matrix size mismatch");
        s.dist_ = std::move(dist);
        s.mu_ = std::move(mu);
        s.kernel_ = std::move(kernel);
        s.phi_ = phi;
        s.labels_ = std::move(labels);
        if (s.labels_.empty())
            for (int i = 0; i < s.n_; ++i) s.labels_.push_back(std::to_string(i));
        s.window_radius_ = std::numeric_limits<double>::infinity();
        s.center_ = 0;
        s.validate_general();
        s.finish_general();
        return s;
    }

    int size() const { return n_; }
    const std::string& label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
    int index_of(const std::string& label) const {
        for (int i = 0; i < n_; ++i)
            if (labels_[static_cast<std::size_t>(i)] == label) return i;
        throw config_error("unknown point label: " + label);
    }
    double mu(int i) const { return mu_[static_cast<std::size_t>(i)]; }
    const ScaleFunction& phi() const { return phi_; }
    Geometry geometry() const { return geometry_; }
    double window_radius() const { return window_radius_; }
    int center() const { return center_; }
    double spacing() const { return spacing_; }
    double kernel_c() const {
        if (auto* k = std::get_if<JPhiKernel>(&kernel_)) return k->c;
        throw config_error("kernel has no closed-form constant");
    }
    bool has_jphi_kernel() const { return std::holds_alternative<JPhiKernel>(kernel_); }

    double dist(int i, int j) const {
        if (geometry_ == Geometry::general) return dist_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const auto& a = coords_[static_cast<std::size_t>(i)];
        const auto& b = coords_[static_cast<std::size_t>(j)];
        double dx = std::abs(a[0] - b[0]), dy = std::abs(a[1] - b[1]);
        switch (geometry_) {
            case Geometry::z1: return spacing_ * dx;
            case Geometry::z2_l1: return spacing_ * (dx + dy);
            default: return spacing_ * std::sqrt(dx * dx + dy * dy);
        }
    }

    // Open ball within the window; fails loudly if the ball could contain
    // points outside the window.
    std::vector<int> ball(int x, double r) const {
        require_inside(x, r);
        std::vector<int> out;
        for (int y = 0; y < n_; ++y)
            if (dist(x, y) < r) out.push_back(y);
        return out;
    }

    double volume(int x, double r) const {
        require_inside(x, r);
        double v = 0.0;
        for (int y = 0; y < n_; ++y)
            if (dist(x, y) < r) v += mu(y);
        return v;
    }

    // Volume of the infinite model space (exact on lattices at any radius up
    // to the tail-table span); used by the closed-form kernel.
    double model_volume(int x, double r) const {
        if (r <= 0) throw domain_error("model_volume: radius must be positive");
        switch (geometry_) {
            case Geometry::z1: {
                long long k = ceil_count(r / spacing_);
                return mass_ * static_cast<double>(2 * k - 1);
            }
            case Geometry::z2_l1: {
                long long m = ceil_count(r / spacing_) - 1;
                return mass_ * static_cast<double>(2 * m * m + 2 * m + 1);
            }
            case Geometry::z2_euclid: {
                double t = r / spacing_;
                return mass_ * static_cast<double>(disk_count_below(t * t));
            }
            default: {
                double v = 0.0;
                for (int y = 0; y < n_; ++y)
                    if (dist(x, y) < r) v += mu(y);
                return v;
            }
        }
    }

    double isolation_radius(int x) const {
        if (n_ < 2) throw domain_error("isolation radius undefined on a singleton window");
        if (geometry_ != Geometry::general) return spacing_;
        double d = std::numeric_limits<double>::infinity();
        for (int y = 0; y < n_; ++y)
            if (y != x) d = std::min(d, dist(x, y));
        return d;
    }

    double min_isolation() const {
        double d = std::numeric_limits<double>::infinity();
        for (int x = 0; x < n_; ++x) d = std::min(d, isolation_radius(x));
        return d;
    }

    double jump_rate(int x, int y) const {
        if (x == y) throw diagonal_error("jump rate undefined on the diagonal");
        if (auto* mk = std::get_if<MatrixKernel>(&kernel_))
            return mk->J[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
        double d = dist(x, y);
        double c = std::get<JPhiKernel>(kernel_).c;
        if (geometry_ == Geometry::general) {
            double vx = model_volume(x, d), vy = model_volume(y, d);
            return c / (std::sqrt(vx * vy) * phi_.evaluate(d));
        }
        return c / (model_volume(x, d) * phi_.evaluate(d));
    }

    // (v(x), tail J(x, rho)), both certified within the oracle tolerance,
    // including mass beyond the window.
    std::pair<double, double> total_rate_and_tail(const TailOracle& oracle, int x,
                                                  double rho) const {
        if (!(oracle.tolerance > 0)) throw config_error("tail tolerance must be positive");
        if (geometry_ == Geometry::general) {
            double v = 0.0, tail = 0.0;
            for (int y = 0; y < n_; ++y) {
                if (y == x) continue;
                double jm = jump_rate(x, y) * mu(y);
                v += jm;
                if (dist(x, y) >= rho) tail += jm;
            }
            return {v, tail};
        }
        return {lattice_tail(spacing_, oracle), lattice_tail(rho, oracle)};
    }

    // Cached total jump rate v(x) at the construction-time tolerance.
    double rate_v(int x) const { return v_[static_cast<std::size_t>(x)]; }
    double tail_tolerance() const { return tail_tol_; }

    double row_rate(int x, int y) const { return jump_rate(x, y) * mu(y); }

    // Jump rate out of the window (zero on complete spaces).
    double out_rate(int x) const {
        if (geometry_ == Geometry::general) return 0.0;
        double in = 0.0;
        for (int y = 0; y < n_; ++y)
            if (y != x) in += row_rate(x, y);
        return std::max(0.0, rate_v(x) - in);
    }

private:
    static long long ceil_count(double t) {
        // smallest integer >= t, guarding against one-ulp undershoot of
        // ratios that are exact integers
        long long k = static_cast<long long>(std::ceil(t - 1e-12));
        return std::max<long long>(k, 1);
    }

    void require_inside(int x, double r) const {
        if (geometry_ == Geometry::general) return;
        double reach = dist(x, center_) + r;
        if (reach > window_radius_)
            throw window_overflow_error("ball of radius " + std::to_string(r) +
                                            " around " + label(x) + " exceeds the window",
                                        reach);
    }

    void init_lattice(int radius, const ScaleFunction& phi, double kernel_c, double spacing,
                      double mass, double tail_tol) {
        if (radius < 1) throw config_error("lattice window radius must be >= 1");
        if (!(spacing > 0) || !(mass > 0)) throw config_error("spacing and mass must be positive");
        phi_ = phi;
        kernel_ = JPhiKernel{kernel_c};
        spacing_ = spacing;
        mass_ = mass;
        tail_tol_ = tail_tol;
        window_radius_ = (radius + 1) * spacing;
        if (geometry_ == Geometry::z1) {
            for (int i = -radius; i <= radius; ++i) {
                coords_.push_back({static_cast<double>(i), 0.0});
                labels_.push_back(std::to_string(i));
            }
        } else {
            for (int i = -radius; i <= radius; ++i)
                for (int j = -radius; j <= radius; ++j) {
                    coords_.push_back({static_cast<double>(i), static_cast<double>(j)});
                    labels_.push_back(std::to_string(i) + "," + std::to_string(j));
                }
        }
        n_ = static_cast<int>(coords_.size());
        mu_.assign(static_cast<std::size_t>(n_), mass);
        for (int i = 0; i < n_; ++i)
            if (coords_[static_cast<std::size_t>(i)][0] == 0 && coords_[static_cast<std::size_t>(i)][1] == 0)
                center_ = i;
        if (geometry_ == Geometry::z2_euclid) build_disk_table(std::max(64, 4 * radius));
        TailOracle oracle{tail_tol_};
        double v = lattice_tail(spacing_, oracle);
        v_.assign(static_cast<std::size_t>(n_), v);
    }

    void validate_general() const {
        for (int i = 0; i < n_; ++i) {
            if (!(mu_[static_cast<std::size_t>(i)] > 0)) throw config_error("masses must be positive");
            if (dist_[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(n_))
                throw config_error("distance matrix must be square");
            if (dist_[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] != 0.0)
                throw config_error("distance matrix diagonal must be zero");
        }
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
                double d = dist_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (i != j && !(d > 0)) throw config_error("distinct points need positive distance");
                if (std::abs(d - dist_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) > 1e-12 * (1 + d))
                    throw config_error("distance matrix must be symmetric");
            }
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                for (int k = 0; k < n_; ++k) {
                    double dij = dist_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                    double djk = dist_[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
                    double dik = dist_[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                    if (dik > dij + djk + 1e-12 * (1 + dik))
                        throw config_error("distance matrix violates the triangle inequality");
                }
        if (auto* mk = std::get_if<MatrixKernel>(&kernel_)) {
            if (mk->J.size() != static_cast<std::size_t>(n_))
                throw config_error("rate matrix size mismatch");
            for (int i = 0; i < n_; ++i) {
                if (mk->J[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(n_))
                    throw config_error("rate matrix must be square");
                for (int j = 0; j < n_; ++j) {
                    double a = mk->J[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                    double b = mk->J[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
                    if (a < 0) throw config_error("rates must be nonnegative");
                    if (i == j && a != 0) throw config_error("rate matrix diagonal must be zero");
                    if (std::abs(a - b) > 1e-12 * (1 + std::abs(a)))
                        throw config_error("rate matrix must be symmetric");
                }
            }
        }
    }

    void finish_general() {
        v_.assign(static_cast<std::size_t>(n_), 0.0);
        if (n_ < 2) return;
        for (int x = 0; x < n_; ++x) {
            double v = 0.0;
            for (int y = 0; y < n_; ++y)
                if (y != x) v += jump_rate(x, y) * mu(y);
            v_[static_cast<std::size_t>(x)] = v;
        }
        tail_tol_ = 0.0;
    }

    // ---- lattice tail sums ----------------------------------------------

    // J(x, rho) for the closed-form kernel on a translation-invariant
    // lattice; certified bracket, midpoint returned.
    double lattice_tail(double rho, const TailOracle& oracle) const {
        double c = std::get<JPhiKernel>(kernel_).c;
        if (geometry_ == Geometry::z2_euclid) return disk_tail(rho, c, oracle);
        long long k0 = std::max<long long>(1, static_cast<long long>(std::ceil(rho / spacing_ - 1e-12)));
        auto term = [&](double k) -> double {
            if (geometry_ == Geometry::z1) return 2.0 * c / ((2.0 * k - 1.0) * phi_.evaluate(k * spacing_));
            return 4.0 * k * c / ((2.0 * k * k - 2.0 * k + 1.0) * phi_.evaluate(k * spacing_));
        };
        auto tail_upper = [&](double X) -> double {
            double b1 = phi_.beta1(), c1 = phi_.c1();
            if (geometry_ == Geometry::z1) return c / ((1.0 - 0.5 / X) * c1 * b1 * phi_.evaluate(X * spacing_));
            return 2.0 * c / ((1.0 - 1.0 / X) * c1 * b1 * phi_.evaluate(X * spacing_));
        };
        double sum = 0.0;
        long long K = std::max<long long>(2 * k0, 64);
        long long k = k0;
        while (true) {
            for (; k <= K; ++k) sum += term(static_cast<double>(k));
            auto hiB = detail::integral_bracket(term, static_cast<double>(K), tail_upper);
            auto loB = detail::integral_bracket(term, static_cast<double>(K + 1), tail_upper);
            double lo = sum + loB.first, hi = sum + hiB.second;
            double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            if (half <= oracle.tolerance * mid) return mid;
            if (static_cast<std::size_t>(K) >= oracle.max_shells)
                throw certification_error("lattice tail sum: tolerance not reached", half / mid);
            K *= 2;
        }
    }

    // squared-norm histogram for the euclidean plane lattice
    void build_disk_table(long long K) const {
        std::lock_guard<std::mutex> lock(disk_->mutex);
        if (disk_->span >= K) return;
        long long K2 = K * K;
        std::vector<std::uint32_t> cnt(static_cast<std::size_t>(K2), 0);
        for (long long i = -K + 1; i <= K - 1; ++i) {
            long long rem = K2 - i * i;
            long long jmax = static_cast<long long>(std::ceil(std::sqrt(static_cast<double>(rem)))) + 1;
            while (jmax * jmax >= rem) --jmax;
            for (long long j = -jmax; j <= jmax; ++j) ++cnt[static_cast<std::size_t>(i * i + j * j)];
        }
        disk_->cum.assign(cnt.size() + 1, 0);
        for (std::size_t q = 0; q < cnt.size(); ++q)
            disk_->cum[q + 1] = disk_->cum[q] + cnt[q];
        disk_->cnt = std::move(cnt);
        disk_->span = K;
    }

    // number of lattice points with squared norm < t2 (t2 <= span^2)
    long long disk_count_below(double t2) const {
        long long q = static_cast<long long>(std::ceil(t2 - 1e-9));
        if (q > disk_->span * disk_->span) {
            build_disk_table(static_cast<long long>(std::ceil(std::sqrt(t2))) + 2);
        }
        if (q < 1) return 0;
        return static_cast<long long>(disk_->cum[static_cast<std::size_t>(q)]);
    }

    double disk_tail(double rho, double c, const TailOracle& oracle) const {
        const double s = spacing_;
        long long K = std::max<long long>(disk_->span, 64);
        while (true) {
            build_disk_table(K);
            K = disk_->span;
            long long K2 = K * K;
            long long q0 = std::max<long long>(1, static_cast<long long>(std::ceil(rho * rho / (s * s) - 1e-9)));
            if (q0 >= K2) throw domain_error("tail radius exceeds the disk table span");
            double sum = 0.0;
            for (long long q = q0; q < K2; ++q) {
                std::uint32_t n = disk_->cnt[static_cast<std::size_t>(q)];
                if (!n) continue;
                double below = static_cast<double>(disk_->cum[static_cast<std::size_t>(q)]);
                sum += n * c / (below * phi_.evaluate(s * std::sqrt(static_cast<double>(q))));
            }
            // remainder over |y| >= K: unit-cell comparison with monotone
            // radial envelopes; inscribed l1 ball below, circumscribed disk above
            const double h = std::sqrt(2.0) / 2.0;
            auto upper_env = [&](double tau) -> double {
                double m = tau - 1.0;
                double nlo = 2.0 * m * m + 2.0 * m + 1.0;
                return 2.0 * M_PI * (tau + h) * c / (nlo * phi_.evaluate(s * tau));
            };
            auto lower_env = [&](double tau) -> double {
                double nhi = M_PI * (tau + h) * (tau + h);
                return 2.0 * M_PI * (tau - h) * c / (nhi * phi_.evaluate(s * tau));
            };
            auto upper_tail = [&](double X) -> double {
                double b1 = phi_.beta1(), c1 = phi_.c1();
                double lead = (1.0 + h / X) / ((1.0 - 1.0 / X) * (1.0 - 1.0 / X));
                return M_PI * c * lead / (c1 * b1 * phi_.evaluate(s * X));
            };
            auto zero_tail = [](double) { return 0.0; };
            auto hiB = detail::integral_bracket(upper_env, static_cast<double>(K) - 2.0 * h, upper_tail);
            auto loB = detail::integral_bracket(lower_env, static_cast<double>(K) + 2.0 * h, zero_tail);
            double lo = sum + loB.first, hi = sum + hiB.second;
            double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            if (half <= oracle.tolerance * mid) return mid;
            if (static_cast<std::size_t>(K) * 2 > (std::size_t(1) << 12))
                throw certification_error("plane lattice tail sum: tolerance not reached", half / mid);
            K *= 2;
        }
    }

    Geometry geometry_ = Geometry::general;
    int n_ = 0;
    int center_ = 0;
    double spacing_ = 1.0;
    double mass_ = 1.0;
    double window_radius_ = 0.0;
    double tail_tol_ = 1e-10;
    std::vector<std::array<double, 2>> coords_;
    std::vector<std::vector<double>> dist_;
    std::vector<double> mu_;
    std::vector<std::string> labels_;
    KernelSpec kernel_ = JPhiKernel{};
    ScaleFunction phi_ = ScaleFunction::power(2.0);
    std::vector<double> v_;

    struct DiskCache {
        std::mutex mutex;
        long long span = 0;
        std::vector<std::uint32_t> cnt;
        std::vector<std::uint64_t> cum;
    };
    std::shared_ptr<DiskCache> disk_ = std::make_shared<DiskCache>();
};

} // namespace auxheat
