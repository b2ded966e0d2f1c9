#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "common.hpp"
#include "rng.hpp"
#include "scale.hpp"

namespace auxheat {

// Binary-prefix cell: all infinite words extending the given prefix.
// Depth 0 is the whole space; measure 2^-depth.
struct Cell {
    std::uint64_t prefix = 0; // bit i (1-based) at position depth-i
    int depth = 0;

    double measure() const { return std::exp2(-static_cast<double>(depth)); }

    int bit(int i) const { return static_cast<int>((prefix >> (depth - i)) & 1ULL); }

    std::string to_string() const {
        std::string s;
        for (int i = 1; i <= depth; ++i) s += static_cast<char>('0' + bit(i));
        return s + "/" + std::to_string(depth);
    }

    bool operator==(const Cell& o) const { return depth == o.depth && prefix == o.prefix; }
};

// Infinite binary word: finitely many pinned bits, the rest drawn from a
// counter-based hash of the word's seed. Every bit is fixed from birth, so
// words are immutable values and repeated reads agree.
class LazyWord {
public:
    LazyWord() = default;
    explicit LazyWord(std::uint64_t seed) : seed_(seed) {}
    LazyWord(std::uint64_t prefix, int prefix_len, std::uint64_t seed)
        : prefix_(prefix), prefix_len_(prefix_len), seed_(seed) {}

    static LazyWord sample_uniform(RngStream& rng) { return LazyWord(rng.raw()); }

    int bit(int i) const {
        if (i < 1) throw domain_error("word bits are 1-based");
        if (i <= prefix_len_) return static_cast<int>((prefix_ >> (prefix_len_ - i)) & 1ULL);
        return static_cast<int>(splitmix64(seed_ + 0x632be59bd9b4e019ULL * static_cast<std::uint64_t>(i)) & 1ULL);
    }

    // first m bits as a cell E^w_m
    Cell cell(int m) const {
        if (m < 0 || m > 62) throw domain_error("cell depth out of range");
        std::uint64_t p = 0;
        for (int i = 1; i <= m; ++i) p = (p << 1) | static_cast<std::uint64_t>(bit(i));
        return Cell{p, m};
    }

    // sphere A^w_m: words agreeing through m-1 and differing at m
    Cell sphere(int m) const {
        Cell c = cell(m);
        c.prefix ^= 1ULL;
        return c;
    }

    bool in_cell(const Cell& c) const {
        for (int i = 1; i <= c.depth; ++i)
            if (bit(i) != c.bit(i)) return false;
        return true;
    }

    // new word keeping bits 1..m-1 and redrawing everything from index m on
    LazyWord refreshed_from(int m, std::uint64_t fresh_seed) const {
        if (m < 1 || m > 63) throw domain_error("refresh index out of range");
        std::uint64_t p = 0;
        for (int i = 1; i < m; ++i) p = (p << 1) | static_cast<std::uint64_t>(bit(i));
        return LazyWord(p, m - 1, fresh_seed);
    }

    static LazyWord uniform_in_cell(const Cell& c, std::uint64_t fresh_seed) {
        return LazyWord(c.prefix, c.depth, fresh_seed);
    }

private:
    std::uint64_t prefix_ = 0;
    int prefix_len_ = 0;
    std::uint64_t seed_ = 0;
};

// Least index where the words disagree; 0 means they agree through the depth
// cutoff (an event of probability 2^-max_depth for independent words).
inline int disagreement_index(const LazyWord& w, const LazyWord& v,
                              int max_depth = kDefaultMaxDepth) {
    for (int i = 1; i <= max_depth; ++i)
        if (w.bit(i) != v.bit(i)) return i;
    return 0;
}

// floor(log2(ratio)) for ratio >= 1, snapping values within a few ulps of an
// exact power of two onto it
inline int floor_log2_guarded(double ratio) {
    if (!(ratio >= 1.0)) throw domain_error("floor_log2_guarded: ratio must be >= 1");
    int e = static_cast<int>(std::floor(std::log2(ratio)));
    const double guard = 1.0 + 8.0 * 2.220446049250313e-16;
    while (std::exp2(static_cast<double>(e + 1)) <= ratio * guard) ++e;
    while (std::exp2(static_cast<double>(e)) > ratio * guard) --e;
    return e;
}

// cell radius d^D_m = phi^{-1}(phi(D) / 2^m)
inline double cell_radius(int m, double D, const ScaleFunction& f) {
    return f.invert(f.evaluate(D) * std::exp2(-static_cast<double>(m)));
}

// ultrametric rho^D(w, w')
inline double rho_distance(const LazyWord& w, const LazyWord& v, double D,
                           const ScaleFunction& f, int max_depth = kDefaultMaxDepth) {
    if (!(D > 0)) throw domain_error("rho_distance: D must be positive");
    int m = disagreement_index(w, v, max_depth);
    if (m == 0) return 0.0;
    return cell_radius(m, D, f);
}

// ball volume V~^D(r) = 2^{-floor(log2(phi(D)/phi(r)))}, clamped to 1 above D
inline double tilde_volume(double r, double D, const ScaleFunction& f) {
    if (!(r > 0)) throw domain_error("tilde_volume: radius must be positive");
    if (r > D) return 1.0;
    int e = floor_log2_guarded(f.evaluate(D) / f.evaluate(r));
    return std::exp2(-static_cast<double>(e));
}

// depth of the cell B~^D(w, r), i.e. m with d^D_{m+1} < r <= d^D_m
inline int ball_cell_depth(double r, double D, const ScaleFunction& f,
                           int max_depth = kDefaultMaxDepth) {
    if (!(r > 0)) throw domain_error("ball_cell_depth: radius must be positive");
    if (r > D) return 0;
    int m = floor_log2_guarded(f.evaluate(D) / f.evaluate(r));
    if (m > max_depth)
        throw domain_error("ball radius below the depth-cutoff resolution");
    return m;
}

inline Cell ball_cell(const LazyWord& w, double r, double D, const ScaleFunction& f,
                      int max_depth = kDefaultMaxDepth) {
    return w.cell(ball_cell_depth(r, D, f, max_depth));
}

} // namespace auxheat
