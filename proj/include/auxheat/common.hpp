#pragma once

#include <stdexcept>
#include <string>

namespace auxheat {

// Depth cutoff for binary words: events below the spatial resolution of
// depth-M_max cells are merged into depth M_max. Probabilistic statements
// therefore carry a 2^-M_max resolution caveat.
inline constexpr int kDefaultMaxDepth = 40;

class domain_error : public std::runtime_error {
public:
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// A query needed points (or mass) outside the finite window.
class window_overflow_error : public std::runtime_error {
public:
    window_overflow_error(const std::string& what, double required_radius)
        : std::runtime_error(what), required_radius(required_radius) {}
    double required_radius;
};

// A tail oracle or series could not certify the requested tolerance.
class certification_error : public std::runtime_error {
public:
    certification_error(const std::string& what, double achieved_bound)
        : std::runtime_error(what), achieved_bound(achieved_bound) {}
    double achieved_bound;
};

class diagonal_error : public std::runtime_error {
public:
    explicit diagonal_error(const std::string& what) : std::runtime_error(what) {}
};

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace auxheat
