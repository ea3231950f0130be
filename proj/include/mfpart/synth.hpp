#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "mfpart/errors.hpp"
#include "mfpart/random.hpp"

namespace mfpart {

enum class CascadeMode { deterministic, randomized };

inline CascadeMode parse_cascade_mode(std::string_view s) {
    if (s == "det" || s == "deterministic") return CascadeMode::deterministic;
    if (s == "rand" || s == "random" || s == "randomized") return CascadeMode::randomized;
    throw UsageError("cascade mode must be 'det' or 'rand'");
}

/// Binomial p-model cascade on 2^depth cells.
struct CascadeSpec {
    double p = 0.4;
    int depth = 14;
    CascadeMode mode = CascadeMode::deterministic;
    std::uint64_t seed = 0;
};

inline constexpr int kMaxCascadeDepth = 26;

/// Splits unit mass recursively into fractions p and 1-p. Deterministic mode
/// always gives p to the left half; randomized mode flips a fair coin per node
/// (level by level, left to right). Every dyadic box holds the same multiset
/// of masses in both modes.
inline std::vector<double> generate_cascade(const CascadeSpec& spec) {
    if (!(spec.p > 0.0 && spec.p < 1.0)) throw DomainError("cascade p must lie in (0, 1)");
    if (spec.depth < 1 || spec.depth > kMaxCascadeDepth) throw DomainError("cascade depth must lie in [1, 26]");

    Rng rng(spec.seed);
    std::vector<double> cur{1.0};
    std::vector<double> next;
    for (int level = 0; level < spec.depth; ++level) {
        next.resize(cur.size() * 2);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            double left = spec.p, right = 1.0 - spec.p;
            if (spec.mode == CascadeMode::randomized && (rng() >> 63) != 0) std::swap(left, right);
            next[2 * i] = cur[i] * left;
            next[2 * i + 1] = cur[i] * right;
        }
        cur.swap(next);
    }
    return cur;
}

/// Independent log-normal draws exp(mu_log + sigma_log * Z).
inline std::vector<double> generate_iid_lognormal(std::size_t length, double mu_log, double sigma_log,
                                                  std::uint64_t seed) {
    if (length < 1) throw DomainError("length must be at least 1");
    if (!(sigma_log >= 0.0)) throw DomainError("sigma_log must be non-negative");
    std::vector<double> out(length);
    if (sigma_log == 0.0) {
        std::fill(out.begin(), out.end(), std::exp(mu_log));
        return out;
    }
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    for (auto& x : out) x = std::exp(mu_log + sigma_log * z(rng));
    return out;
}

}  // namespace mfpart
