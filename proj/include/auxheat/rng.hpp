#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace auxheat {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_name(std::string_view name) {
    // FNV-1a, mixed through splitmix64
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

// Named, indexed substream of a master seed. Distinct (name, index) pairs
// give statistically independent, reproducible generators.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::string_view name, std::uint64_t index = 0)
        : master_(master_seed),
          name_(name),
          index_(index),
          engine_(splitmix64(splitmix64(master_seed ^ hash_name(name)) ^ index)) {}

    std::mt19937_64& engine() { return engine_; }

    std::uint64_t master_seed() const { return master_; }
    const std::string& name() const { return name_; }
    std::uint64_t index() const { return index_; }

    // Derived stream for a substream index (used to partition Monte Carlo
    // work across workers; results are a multiset, order-independent).
    RngStream substream(std::uint64_t index) const { return RngStream(master_, name_, index); }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
    bool fair_bit() { return (engine_() & 1ULL) != 0; }
    std::uint64_t raw() { return engine_(); }

private:
    std::uint64_t master_;
    std::string name_;
    std::uint64_t index_;
    std::mt19937_64 engine_;
};

} // namespace auxheat
