#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "aux_space.hpp"
#include "common.hpp"
#include "rng.hpp"
#include "space.hpp"
#include "ultra.hpp"

namespace auxheat {

enum class EventKind { start, jump, refresh, exit, horizon, window_leak };

inline const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::start: return "start";
        case EventKind::jump: return "jump";
        case EventKind::refresh: return "refresh";
        case EventKind::exit: return "exit";
        case EventKind::horizon: return "horizon";
        default: return "window-leak";
    }
}

struct TrajEvent {
    double t = 0.0;
    int x = 0;
    LazyWord word;   // fiber coordinate; meaningful when has_word
    bool has_word = false;
    EventKind kind = EventKind::start;
};

struct Trajectory {
    enum class Reason { horizon, exit, window_leak };
    std::vector<TrajEvent> events;
    Reason reason = Reason::horizon;
};

// Precomputed jump-target distribution per window point. The last slot of
// each row is the rate of jumping outside the window (window leak).
class JumpTable {
public:
    explicit JumpTable(const AtomicSpace& s) : s_(&s) {
        int n = s.size();
        cum_.resize(static_cast<std::size_t>(n));
        for (int x = 0; x < n; ++x) {
            auto& row = cum_[static_cast<std::size_t>(x)];
            row.reserve(static_cast<std::size_t>(n) + 1);
            double acc = 0.0;
            for (int y = 0; y < n; ++y) {
                if (y != x) acc += s.row_rate(x, y);
                row.push_back(acc);
            }
            row.push_back(acc + s.out_rate(x));
        }
    }

    const AtomicSpace& space() const { return *s_; }

    double total_rate(int x) const { return cum_[static_cast<std::size_t>(x)].back(); }

    // jump target, or -1 when the jump leaves the window
    int sample_target(int x, RngStream& rng) const {
        const auto& row = cum_[static_cast<std::size_t>(x)];
        double u = rng.uniform() * row.back();
        auto it = std::upper_bound(row.begin(), row.end() - 1, u);
        std::size_t y = static_cast<std::size_t>(it - row.begin());
        if (y >= row.size() - 1) return -1;
        return static_cast<int>(y);
    }

private:
    const AtomicSpace* s_;
    std::vector<std::vector<double>> cum_;
};

// CTMC on the window: holding time Exponential(v(x)), target by row rates,
// with an outside-window pseudo-target that terminates the run.
inline Trajectory simulate_original(const JumpTable& table, int x0, double horizon,
                                    RngStream& rng) {
    if (!(horizon > 0)) throw domain_error("simulation horizon must be positive");
    Trajectory traj;
    traj.events.push_back({0.0, x0, LazyWord(), false, EventKind::start});
    double t = 0.0;
    int x = x0;
    while (true) {
        double rate = table.total_rate(x);
        double hold = rate > 0 ? rng.exponential(rate) : horizon + 1.0;
        if (t + hold >= horizon) {
            traj.events.push_back({horizon, x, LazyWord(), false, EventKind::horizon});
            traj.reason = Trajectory::Reason::horizon;
            return traj;
        }
        t += hold;
        int y = table.sample_target(x, rng);
        if (y < 0) {
            traj.events.push_back({t, x, LazyWord(), false, EventKind::window_leak});
            traj.reason = Trajectory::Reason::window_leak;
            return traj;
        }
        x = y;
        traj.events.push_back({t, x, LazyWord(), false, EventKind::jump});
    }
}

// Index of the first refresh clock that has rung by elapsed time t, i.e.
// J_t = min{m : T_m <= t}; the clocks above max_depth are merged.
inline int sample_first_clock_index(double t, double phi_D, RngStream& rng, int max_depth) {
    double s = t / phi_D;
    double u = rng.uniform();
    // P(J_t <= j) = 1 - exp(-(3*2^{j+1}-2) s)
    for (int j = 0; j <= max_depth; ++j) {
        double cdf = -std::expm1(-(3.0 * std::exp2(static_cast<double>(j + 1)) - 2.0) * s);
        if (u < cdf) return j;
    }
    return max_depth;
}

// State of the refreshing process at elapsed time t, started from w.
// Conditional on J_t = j the location is uniform on the j-cell of w.
inline LazyWord refresh_state(const LazyWord& w, double t, double phi_D, RngStream& rng,
                              int max_depth = kDefaultMaxDepth) {
    int j = sample_first_clock_index(t, phi_D, rng, max_depth);
    return w.refreshed_from(j + 1, rng.raw());
}

// Refreshing process within one fiber; records only the endpoint state,
// which has the exact law of the full clock superposition.
inline Trajectory simulate_refresh(const AuxSpace& aux, int x, const LazyWord& w0,
                                   double horizon, RngStream& rng) {
    if (!(horizon > 0)) throw domain_error("simulation horizon must be positive");
    Trajectory traj;
    traj.events.push_back({0.0, x, w0, true, EventKind::start});
    double phi_D = aux.phi().evaluate(aux.D(x));
    LazyWord w = refresh_state(w0, horizon, phi_D, rng, aux.max_depth());
    traj.events.push_back({horizon, x, w, true, EventKind::horizon});
    return traj;
}

// Coupled auxiliary process: original jump skeleton for the fiber sequence,
// refreshing within each sojourn, fresh uniform word on fiber entry.
inline Trajectory simulate_aux(const AuxSpace& aux, const JumpTable& table,
                               const AuxPoint& z0, double horizon, RngStream& rng) {
    if (!(horizon > 0)) throw domain_error("simulation horizon must be positive");
    Trajectory traj;
    traj.events.push_back({0.0, z0.x, z0.word, true, EventKind::start});
    double t = 0.0;
    int x = z0.x;
    LazyWord w = z0.word;
    while (true) {
        double rate = table.total_rate(x);
        double hold = rate > 0 ? rng.exponential(rate) : horizon + 1.0;
        double phi_D = aux.phi().evaluate(aux.D(x));
        if (t + hold >= horizon) {
            LazyWord wt = refresh_state(w, horizon - t, phi_D, rng, aux.max_depth());
            traj.events.push_back({horizon, x, wt, true, EventKind::horizon});
            traj.reason = Trajectory::Reason::horizon;
            return traj;
        }
        t += hold;
        int y = table.sample_target(x, rng);
        if (y < 0) {
            traj.events.push_back({t, x, w, true, EventKind::window_leak});
            traj.reason = Trajectory::Reason::window_leak;
            return traj;
        }
        x = y;
        w = LazyWord(rng.raw()); // uniform on the entered fiber
        traj.events.push_back({t, x, w, true, EventKind::jump});
    }
}

// First exit time from a base ball, simulated on the window. Jumps outside
// the window count as exits (the ball is inside the window by precondition).
inline double exit_time_base(const JumpTable& table, int x0, double r, RngStream& rng) {
    const AtomicSpace& s = table.space();
    s.ball(x0, r); // window check
    double t = 0.0;
    int x = x0;
    while (true) {
        t += rng.exponential(table.total_rate(x));
        int y = table.sample_target(x, rng);
        if (y < 0 || s.dist(x0, y) >= r) return t;
        x = y;
    }
}

// First exit time from a fiber ball E^{w0}_m (event-driven): candidate
// events are fiber exits (rate v) and type-j refreshes with j < m; a type-j
// refresh leaves the cell with probability 1 - 2^{j-m}.
inline double exit_time_fiber(const AuxSpace& aux, int x, int m, RngStream& rng) {
    if (m < 0) throw domain_error("fiber cell depth must be nonnegative");
    double phi_D = aux.phi().evaluate(aux.D(x));
    double v = aux.base().rate_v(x);
    // sum of lambda_j for j < m
    double clock_sum = m == 0 ? 0.0 : (3.0 * std::exp2(static_cast<double>(m)) - 2.0) / phi_D;
    double total = v + clock_sum;
    double t = 0.0;
    while (true) {
        t += rng.exponential(total);
        double u = rng.uniform() * total;
        if (u < v) return t; // left the fiber
        u -= v;
        // locate the clock index j
        int j = 0;
        double lam0 = 4.0 / phi_D;
        double acc = lam0;
        while (u >= acc && j + 1 < m) {
            ++j;
            acc += 3.0 * std::exp2(static_cast<double>(j)) / phi_D;
        }
        double stay = std::exp2(static_cast<double>(j - m));
        if (rng.uniform() >= stay) return t;
    }
}

// Exit time from an auxiliary ball of either branch.
inline double exit_time_aux(const AuxSpace& aux, const JumpTable& table, const AuxPoint& z0,
                            double r, RngStream& rng) {
    AuxBall b = aux.ball(z0, r);
    if (!b.fiber) return exit_time_base(table, z0.x, r, rng);
    return exit_time_fiber(aux, z0.x, b.cell.depth, rng);
}

} // namespace auxheat
