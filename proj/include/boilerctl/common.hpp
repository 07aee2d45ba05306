#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace boilerctl {

// Error categories map onto distinct CLI exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a, used for schema and provenance hashes. Stable across runs and
// platforms, unlike std::hash.
class Fnv1a {
public:
    void update(const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= bytes[i];
            state_ *= 0x100000001b3ull;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    void update(double v) { update(&v, sizeof(v)); }
    void update(std::uint64_t v) { update(&v, sizeof(v)); }
    void update(const std::vector<double>& v) {
        if (!v.empty()) update(v.data(), v.size() * sizeof(double));
    }
    [[nodiscard]] std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string hash_to_hex(std::uint64_t h);

// Deterministic RNG. mt19937_64 gives a standard-pinned stream; the
// distributions are hand-rolled because libstdc++/libc++ disagree on
// std::normal_distribution output for the same engine state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : s_(split_seed(seed)) {}

    std::uint64_t next_u64() {
        // xoshiro256++
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    // standard normal via Box-Muller, spare cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Student-t with 2 degrees of freedom: Z / sqrt(Exp(1))
    double student_t2() {
        const double z = normal();
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return z / std::sqrt(-std::log(u));
    }

    // Derive an independent stream, e.g. one per benchmark problem.
    Rng fork(std::uint64_t salt) {
        Fnv1a h;
        h.update(next_u64());
        h.update(salt);
        return Rng(h.digest());
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    static std::array<std::uint64_t, 4> split_seed(std::uint64_t seed) {
        // splitmix64 expansion of the user seed into the full state
        std::array<std::uint64_t, 4> s{};
        std::uint64_t z = seed;
        for (auto& si : s) {
            z += 0x9e3779b97f4a7c15ull;
            std::uint64_t w = z;
            w = (w ^ (w >> 30)) * 0xbf58476d1ce4e5b9ull;
            w = (w ^ (w >> 27)) * 0x94d049bb133111ebull;
            si = w ^ (w >> 31);
        }
        return s;
    }

    std::array<std::uint64_t, 4> s_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace boilerctl
