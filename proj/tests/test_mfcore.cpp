#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mfpart/analysis.hpp"
#include "mfpart/synth.hpp"

using namespace mfpart;

namespace {

std::vector<double> lognormal_series(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::lognormal_distribution<double> d(0.0, 0.8);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

// Hand-built table where every row is ln chi = slope(q) * ln s + c.
PartitionTable power_law_table(const std::vector<double>& q, const std::vector<std::size_t>& s,
                               double (*slope)(double)) {
    PartitionTable t;
    t.grid.q_values = q;
    t.grid.box_sizes = s;
    t.grid.analyzed_length = s.back() * 4;
    t.ln_chi.resize(q.size() * s.size());
    t.zero_box_count.assign(s.size(), 0);
    t.ranges.assign(q.size(), std::nullopt);
    for (std::size_t qi = 0; qi < q.size(); ++qi)
        for (std::size_t si = 0; si < s.size(); ++si)
            t.at(qi, si) = slope(q[qi]) * std::log(static_cast<double>(s[si])) + 0.25 * q[qi];
    return t;
}

}  // namespace

TEST(Grid, DefaultQGrid) {
    const auto q = make_q_grid(-3.0, 5.0, 0.2);
    ASSERT_EQ(q.size(), 41u);
    EXPECT_EQ(q.front(), -3.0);
    EXPECT_EQ(q.back(), 5.0);
    EXPECT_TRUE(std::is_sorted(q.begin(), q.end()));
    EXPECT_NE(std::find(q.begin(), q.end(), 0.0), q.end());
    EXPECT_NE(std::find(q.begin(), q.end(), 1.0), q.end());
    EXPECT_FALSE(std::signbit(q[15]));
}

TEST(Grid, QGridAlwaysHasZeroAndOne) {
    const auto q = make_q_grid(-2.5, 3.5, 1.0);
    EXPECT_NE(std::find(q.begin(), q.end(), 0.0), q.end());
    EXPECT_NE(std::find(q.begin(), q.end(), 1.0), q.end());
    EXPECT_THROW(make_q_grid(1.0, 0.0, 0.1), UsageError);
    EXPECT_THROW(make_q_grid(0.0, 1.0, 0.0), UsageError);
}

TEST(Grid, BoxSizesDivideT) {
    for (std::size_t len : {1u << 14, 240u * 1000u, 240u * 1000u - 37u, 100000u, 9973u}) {
        const auto g = make_grid(len, -3, 5, 0.2);
        EXPECT_LE(g.analyzed_length, len);
        EXPECT_GE(g.analyzed_length, len * 9 / 10) << len;
        for (std::size_t s : g.box_sizes) EXPECT_EQ(g.analyzed_length % s, 0u);
        EXPECT_TRUE(std::is_sorted(g.box_sizes.begin(), g.box_sizes.end()));
        EXPECT_EQ(g.box_sizes.front(), 1u);
        EXPECT_GE(std::log10(static_cast<double>(g.box_sizes.back())), 2.5) << len;
    }
}

TEST(Grid, PowerOfTwoKeepsFullLength) {
    const auto g = make_grid(1u << 14, -3, 5, 0.2);
    EXPECT_EQ(g.analyzed_length, 1u << 14);
    for (std::size_t s : g.box_sizes) EXPECT_EQ(s & (s - 1), 0u);
    EXPECT_EQ(g.box_sizes.back(), 1u << 12);
}

TEST(BuildMeasure, Examples) {
    const std::vector<double> ones{1, 1, 1, 1};
    auto m = build_measure(ones, 2, 4);
    EXPECT_EQ(m.mu, (std::vector<double>{0.5, 0.5}));

    const std::vector<double> ramp{1, 2, 3, 4};
    m = build_measure(ramp, 2, 4);
    EXPECT_EQ(m.u, (std::vector<double>{3, 7}));
    EXPECT_NEAR(m.mu[0], 0.3, 1e-15);
    EXPECT_NEAR(m.mu[1], 0.7, 1e-15);

    const std::vector<double> gap{1, 2, 0, 0, 3, 4};
    m = build_measure(gap, 2, 6);
    EXPECT_EQ(m.zero_box_count, 1u);
    EXPECT_NEAR(std::accumulate(m.mu.begin(), m.mu.end(), 0.0), 1.0, 1e-15);
}

TEST(BuildMeasure, Errors) {
    const std::vector<double> zeros(8, 0.0);
    EXPECT_THROW(build_measure(zeros, 2, 8), DegenerateSeriesError);
    const std::vector<double> neg{1, -1, 1, 1};
    EXPECT_THROW(build_measure(neg, 2, 4), DomainError);
    const std::vector<double> ok{1, 1, 1, 1, 1, 1};
    EXPECT_THROW(build_measure(ok, 4, 6), UsageError);
}

TEST(BuildMeasure, NestingPreservesTotal) {
    const auto v = lognormal_series(4096, 3);
    for (std::size_t s = 1; s <= 1024; s *= 2) {
        const auto a = build_measure(v, s, 4096);
        const auto b = build_measure(v, 2 * s, 4096);
        for (std::size_t n = 0; n < b.u.size(); ++n) EXPECT_NEAR(b.u[n], a.u[2 * n] + a.u[2 * n + 1], 1e-14 * b.u[n]);
        EXPECT_NEAR(std::accumulate(a.mu.begin(), a.mu.end(), 0.0), 1.0, 1e-12 * a.mu.size());
    }
}

TEST(LnPartition, Examples) {
    const std::vector<double> v{3, 7};
    const auto m = build_measure(v, 1, 2);
    EXPECT_NEAR(*ln_partition(m, 1.0), 0.0, 1e-15);
    EXPECT_NEAR(*ln_partition(m, 2.0), -0.5447271754416722, 1e-14);

    const std::vector<double> even{5, 5};
    EXPECT_NEAR(*ln_partition(build_measure(even, 1, 2), 0.0), std::log(2.0), 1e-15);
}

TEST(LnPartition, ZeroBoxes) {
    const std::vector<double> v{1, 0, 3, 0, 0, 4};
    const auto m = build_measure(v, 1, 6);
    EXPECT_FALSE(ln_partition(m, -0.2).has_value());
    EXPECT_FALSE(ln_partition(m, -3.0).has_value());
    EXPECT_NEAR(*ln_partition(m, 0.0), std::log(3.0), 1e-15);
    const double direct = std::log(std::pow(1.0 / 8, 2) + std::pow(3.0 / 8, 2) + std::pow(4.0 / 8, 2));
    EXPECT_NEAR(*ln_partition(m, 2.0), direct, 1e-14);
}

TEST(LnPartition, MatchesDirectSum) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> w(64);
        for (double& x : w) x = 0.01 + u(rng) * u(rng);
        const auto m = build_measure(w, 1, 64);
        for (double q = -3.0; q <= 5.0001; q += 0.2) {
            long double direct = 0;
            for (double mu : m.mu) direct += std::pow(static_cast<long double>(mu), static_cast<long double>(q));
            EXPECT_NEAR(*ln_partition(m, q), static_cast<double>(std::log(direct)), 1e-10);
        }
    }
}

TEST(LnPartition, SurvivesExtremeRanges) {
    // Direct mu^q would overflow; the log form stays finite.
    std::vector<double> v(1024, 1e-300);
    v[0] = 1.0;
    const auto m = build_measure(v, 1, 1024);
    const auto neg = ln_partition(m, -3.0);
    ASSERT_TRUE(neg.has_value());
    EXPECT_TRUE(std::isfinite(*neg));
    EXPECT_NEAR(*neg, std::log(1023.0) + 900.0 * std::log(10.0), 1e-6);
    EXPECT_NEAR(*ln_partition(m, 5.0), 0.0, 1e-12);
}

TEST(PartitionTable, CascadeMatchesBinomialEnumeration) {
    // Box sums of a depth-d cascade at s = 2^k are p^j (1-p)^(d-k-j) with
    // multiplicity C(d-k, j); sum them explicitly.
    for (int depth : {8, 10, 12}) {
        for (double p : {0.25, 0.3, 0.4, 0.45}) {
            const auto v = generate_cascade({p, depth, CascadeMode::deterministic, 0});
            const auto g = make_grid(v.size(), -3, 5, 0.2);
            const auto t = compute_partition_table(v, g);
            for (std::size_t si = 0; si < g.s_count(); ++si) {
                const int k = static_cast<int>(std::lround(std::log2(static_cast<double>(g.box_sizes[si]))));
                const int m = depth - k;
                for (std::size_t qi = 0; qi < g.q_count(); ++qi) {
                    const long double q = g.q_values[qi];
                    long double sum = 0, binom = 1;
                    for (int j = 0; j <= m; ++j) {
                        const long double mass = std::pow(static_cast<long double>(p), j) *
                                                 std::pow(1.0L - static_cast<long double>(p), m - j);
                        sum += binom * std::pow(mass, q);
                        binom = binom * (m - j) / (j + 1);
                    }
                    EXPECT_NEAR(*t.at(qi, si), static_cast<double>(std::log(sum)), 1e-9)
                        << "d=" << depth << " p=" << p << " s=" << g.box_sizes[si] << " q=" << g.q_values[qi];
                }
            }
        }
    }
}

TEST(PartitionTable, ScaleInvariant) {
    const auto v = lognormal_series(8192, 5);
    auto w = v;
    for (double& x : w) x *= 37.25;
    const AnalysisConfig cfg;
    const auto a = analyze(v, cfg);
    const auto b = analyze(w, cfg);
    for (std::size_t i = 0; i < a.table.ln_chi.size(); ++i) EXPECT_NEAR(*a.table.ln_chi[i], *b.table.ln_chi[i], 1e-12);
    for (std::size_t i = 0; i < a.scaling.tau.size(); ++i) {
        EXPECT_NEAR(*a.scaling.tau[i], *b.scaling.tau[i], 1e-12);
        EXPECT_NEAR(*a.scaling.alpha[i], *b.scaling.alpha[i], 1e-10);
        EXPECT_NEAR(*a.scaling.f_alpha[i], *b.scaling.f_alpha[i], 1e-10);
    }
}

TEST(PartitionTable, IndependentOfJobs) {
    const auto v = lognormal_series(30000, 9);
    const auto g = make_grid(v.size(), -3, 5, 0.2);
    const auto a = compute_partition_table(v, g, 1);
    const auto b = compute_partition_table(v, g, 3);
    EXPECT_EQ(a.ln_chi, b.ln_chi);
    EXPECT_EQ(a.zero_box_count, b.zero_box_count);
}

TEST(Ols, ExactLine) {
    const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
    const auto f = ols(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-15);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.slope_stderr, 0.0, 1e-14);
    EXPECT_NEAR(f.r2, 1.0, 1e-14);
}

TEST(EstimateTau, ExactPowerLaw) {
    auto t = power_law_table({-1, 0, 1, 2}, {1, 2, 4, 8, 16, 32, 64}, [](double) { return 2.0; });
    const auto r = estimate_tau(t);
    for (const auto& tau : r.tau) EXPECT_NEAR(*tau, 2.0, 1e-12);
    for (const auto& se : r.fit_stderr) EXPECT_NEAR(*se, 0.0, 1e-12);
}

TEST(EstimateTau, CascadeOracle) {
    const auto v = generate_cascade({0.4, 14, CascadeMode::deterministic, 0});
    const auto a = analyze(v);
    const auto& g = a.table.grid;
    EXPECT_NEAR(*a.scaling.tau[g.q_index(2.0)], 0.9434164716336324, 0.02);
    EXPECT_NEAR(*a.scaling.tau[g.q_index(0.0)], -1.0, 1e-6);
    EXPECT_NEAR(*a.scaling.tau[g.q_index(-3.0)], -4.340179799443585, 0.02);
    const auto& r = a.table.ranges[g.q_index(-3.0)];
    ASSERT_TRUE(r.has_value());
    EXPECT_FALSE(r->jump_cut.has_value());
    EXPECT_EQ(r->count(), g.s_count());
}

TEST(EstimateTau, CascadeOracleAcrossP) {
    for (double p : {0.25, 0.3, 0.35, 0.45})
        for (int depth : {12, 14}) {
            const auto a = analyze(generate_cascade({p, depth, CascadeMode::deterministic, 0}));
            const auto& q = a.table.grid.q_values;
            for (std::size_t i = 0; i < q.size(); ++i) {
                const double oracle = -std::log(std::pow(p, q[i]) + std::pow(1 - p, q[i])) / std::log(2.0);
                EXPECT_NEAR(*a.scaling.tau[i], oracle, 0.02) << "p=" << p << " d=" << depth << " q=" << q[i];
            }
        }
}

TEST(EstimateTau, Monotone) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto a = analyze(lognormal_series(1 << 13, seed));
        for (std::size_t i = 1; i < a.scaling.tau.size(); ++i) EXPECT_GE(*a.scaling.tau[i], *a.scaling.tau[i - 1]);
    }
}

TEST(ScalingRange, PositiveQIgnoresZeroBoxes) {
    auto v = lognormal_series(1 << 12, 21);
    std::fill(v.begin() + 640, v.begin() + 704, 0.0);
    const auto a = analyze(v);
    const auto& g = a.table.grid;
    const auto& r = a.table.ranges[g.q_index(3.0)];
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->first, 0u);
    EXPECT_EQ(r->last, g.s_count() - 1);
    EXPECT_GT(a.table.zero_box_count[0], 0u);
}

TEST(ScalingRange, ZeroBlockSetsCut) {
    auto v = lognormal_series(1 << 14, 22);
    std::fill(v.begin() + 640, v.begin() + 704, 0.0);  // 64-aligned block of 64
    const auto a = analyze(v);
    const auto& g = a.table.grid;
    const std::size_t qi = g.q_index(-3.0);
    // Enumerate directly which box sizes contain an all-zero box.
    for (std::size_t si = 0; si < g.s_count(); ++si) {
        const auto m = build_measure(v, g.box_sizes[si], g.analyzed_length);
        EXPECT_EQ(a.table.at(qi, si).has_value(), m.zero_box_count == 0) << g.box_sizes[si];
    }
    const auto& r = a.table.ranges[qi];
    ASSERT_TRUE(r.has_value());
    ASSERT_TRUE(r->jump_cut.has_value());
    EXPECT_GE(*r->jump_cut, 64u);
    EXPECT_GT(g.box_sizes[r->first], 64u);
    EXPECT_TRUE(a.scaling.tau[qi].has_value());
}

TEST(ScalingRange, ZeroBlockInShortSeriesLeavesTauUndefined) {
    // Only 128..1024 survive above the block: four scales, one short.
    auto v = lognormal_series(1 << 12, 22);
    std::fill(v.begin() + 640, v.begin() + 704, 0.0);
    const auto a = analyze(v);
    const auto& g = a.table.grid;
    EXPECT_FALSE(a.scaling.tau[g.q_index(-3.0)].has_value());
    EXPECT_TRUE(a.scaling.tau[g.q_index(2.0)].has_value());
}

TEST(ScalingRange, DetectsJumpWithoutUndefinedCells) {
    // A tiny-but-nonzero block: every cell is defined, but negative moments
    // are dominated by it at small s, giving a sharp change of slope.
    auto v = lognormal_series(1 << 14, 23);
    std::fill(v.begin() + 4096, v.begin() + 4096 + 64, 1e-9);
    const auto a = analyze(v);
    const auto& g = a.table.grid;
    const std::size_t qi = g.q_index(-3.0);
    for (std::size_t si = 0; si < g.s_count(); ++si) ASSERT_TRUE(a.table.at(qi, si).has_value());
    const auto& r = a.table.ranges[qi];
    ASSERT_TRUE(r.has_value());
    ASSERT_TRUE(r->jump_cut.has_value());
    EXPECT_GE(*r->jump_cut, 32u);
}

TEST(ScalingRange, TooFewScalesIsUndefined) {
    auto t = power_law_table({-1, 1}, {1, 2, 4, 8}, [](double q) { return q - 1; });
    const auto r = estimate_tau(t);
    EXPECT_FALSE(r.tau[0].has_value());
    EXPECT_FALSE(r.tau[1].has_value());
}

TEST(ScalingRange, FallsBackToWidestRun) {
    // Undefined cell high up leaves too few scales above it; the widest
    // defined run below is used instead.
    auto t = power_law_table({-2, 0, 1}, {1, 2, 4, 8, 16, 32, 64, 128, 256}, [](double q) { return q - 1; });
    t.at(0, 6) = std::nullopt;
    const auto r = select_scaling_range(t, 0);
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->first, 0u);
    EXPECT_EQ(r->last, 5u);
}

TEST(Legendre, Monofractal) {
    std::vector<double> q;
    for (double x = -3; x <= 5.0001; x += 0.5) q.push_back(x);
    ScalingResult r;
    for (double x : q) r.tau.emplace_back(x - 1.0);
    legendre_spectrum(q, r);
    for (std::size_t i = 0; i < q.size(); ++i) {
        EXPECT_NEAR(*r.alpha[i], 1.0, 1e-12);
        EXPECT_NEAR(*r.f_alpha[i], 1.0, 1e-12);
    }
    EXPECT_NEAR(r.delta_alpha, 0.0, 1e-12);
    EXPECT_FALSE(r.non_concave);
}

TEST(Legendre, PModelAlpha) {
    const auto q = make_q_grid(-3, 5, 0.2);
    const double p = 0.4;
    ScalingResult r;
    for (double x : q) r.tau.emplace_back(-std::log(std::pow(p, x) + std::pow(1 - p, x)) / std::log(2.0));
    legendre_spectrum(q, r);
    EXPECT_NEAR(*r.alpha.back(), 0.8050339578864864, 1e-3);
    EXPECT_NEAR(*r.alpha.front(), 1.18822, 1e-2);
    const std::size_t q0 = 15;
    ASSERT_EQ(q[q0], 0.0);
    EXPECT_NEAR(*r.f_alpha[q0], 1.0, 1e-12);
    for (std::size_t i = 1; i < q.size(); ++i) EXPECT_LE(*r.alpha[i], *r.alpha[i - 1] + 1e-6);
    EXPECT_NEAR(r.alpha_min, *r.alpha.back(), 1e-15);
    EXPECT_NEAR(r.alpha_max, *r.alpha.front(), 1e-15);
    EXPECT_NEAR(r.delta_alpha, r.alpha_max - r.alpha_min, 1e-15);
    EXPECT_GE(r.delta_alpha, 0.0);
}

TEST(Legendre, NonConcaveFlagged) {
    const std::vector<double> q{0, 1, 2, 3, 4};
    ScalingResult r;
    for (double x : q) r.tau.emplace_back(x * x * 0.1 + x - 1.0);
    legendre_spectrum(q, r);
    EXPECT_TRUE(r.non_concave);
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_TRUE(r.alpha[0].has_value());
}

TEST(Legendre, NeedsThreePoints) {
    const std::vector<double> q{0, 1};
    ScalingResult r;
    r.tau = {-1.0, 0.0};
    EXPECT_ANY_THROW(legendre_spectrum(q, r));
}

TEST(Analyze, DegenerateSeries) {
    const std::vector<double> flat(4096, 0.0);
    EXPECT_THROW(analyze(flat), DegenerateSeriesError);
}
