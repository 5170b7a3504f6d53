#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "rpcp/combine.hpp"
#include "rpcp/rng.hpp"

using namespace rpcp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> naive_bonferroni(const std::vector<double>& p) {
    std::vector<double> out;
    for (double v : p) out.push_back(std::min(1.0, static_cast<double>(p.size()) * v));
    return out;
}

// min over h >= rank(r) of k p_(h) / h, clamped at 1. Quadratic on purpose.
std::vector<double> naive_bh(const std::vector<double>& p) {
    const std::size_t k = p.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    std::vector<double> out(k);
    for (std::size_t rank = 0; rank < k; ++rank) {
        double best = 1.0;
        for (std::size_t h = rank; h < k; ++h) {
            best = std::min(best, static_cast<double>(k) * p[order[h]] / static_cast<double>(h + 1));
        }
        out[order[rank]] = best;
    }
    return out;
}

std::vector<double> uniforms(std::size_t k, StreamRng& g) {
    std::vector<double> p(k);
    for (auto& v : p) v = g.uniform();
    return p;
}

}  // namespace

TEST_CASE("bonferroni examples") {
    const auto r = bonferroni(std::vector<double>{0.01, 0.2, 0.5});
    REQUIRE(r.adjusted.size() == 3);
    CHECK_THAT(r.adjusted[0], WithinAbs(0.03, 1e-15));
    CHECK_THAT(r.adjusted[1], WithinAbs(0.6, 1e-15));
    CHECK(r.adjusted[2] == 1.0);
    CHECK_THAT(r.p_comb, WithinAbs(0.03, 1e-15));
    CHECK(r.winner == 0);
    CHECK(bonferroni(std::vector<double>{0.37}).p_comb == 0.37);
    CHECK(bonferroni(std::vector<double>(5, 1.0)).p_comb == 1.0);
}

TEST_CASE("benjamini-hochberg examples") {
    const auto r = benjamini_hochberg(std::vector<double>{0.01, 0.02, 0.04});
    CHECK_THAT(r.adjusted[0], WithinAbs(0.03, 1e-15));
    CHECK_THAT(r.adjusted[1], WithinAbs(0.03, 1e-15));
    CHECK_THAT(r.adjusted[2], WithinAbs(0.04, 1e-15));
    CHECK_THAT(r.p_comb, WithinAbs(0.03, 1e-15));
    CHECK(r.winner == 0);
    CHECK(benjamini_hochberg(std::vector<double>{0.42}).adjusted[0] == 0.42);
}

TEST_CASE("bonferroni and BH agree with naive references") {
    StreamRng g(2718, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t k = 1 + g.below(60);
        auto p = uniforms(k, g);
        if (rep % 3 == 0) {
            for (auto& v : p) v = std::pow(v, 6.0);  // crowd the small end
        }
        if (rep % 7 == 0 && k > 2) p[1] = p[0];  // ties
        const auto b = bonferroni(p);
        const auto h = benjamini_hochberg(p);
        const auto nb = naive_bonferroni(p);
        const auto nh = naive_bh(p);
        for (std::size_t i = 0; i < k; ++i) {
            CHECK_THAT(b.adjusted[i], WithinAbs(nb[i], 1e-12));
            CHECK_THAT(h.adjusted[i], WithinAbs(nh[i], 1e-12));
            CHECK(h.adjusted[i] <= b.adjusted[i] + 1e-15);
        }
        CHECK_THAT(b.p_comb, WithinAbs(*std::min_element(nb.begin(), nb.end()), 1e-12));
        CHECK_THAT(h.p_comb, WithinAbs(*std::min_element(nh.begin(), nh.end()), 1e-12));
        CHECK(b.adjusted[b.winner] == b.p_comb);
        CHECK(h.adjusted[h.winner] == h.p_comb);
        CHECK(h.p_comb <= b.p_comb);
    }
}

TEST_CASE("harmonic mean p-value identities") {
    for (double p : {0.001, 0.05, 0.3, 1.0}) {
        const auto r = harmonic_mean_p(std::vector<double>(7, p));
        CHECK_THAT(r.harmonic_mean, WithinRel(p, 1e-12));
        CHECK_THAT(r.p_comb, WithinRel(p, 1e-12));
    }
    const auto r = harmonic_mean_p(std::vector<double>{0.01, 1.0});
    CHECK_THAT(r.harmonic_mean, WithinAbs(2.0 / 101.0, 1e-12));
    CHECK_THAT(r.harmonic_mean, WithinAbs(0.019802, 1e-6));
    CHECK(r.winner == 0);
    CHECK(r.adjusted.empty());
    const auto zero = harmonic_mean_p(std::vector<double>{0.3, 0.0, 0.2});
    CHECK(zero.p_comb == 0.0);
    CHECK(zero.winner == 1);
}

TEST_CASE("cauchy combination identities") {
    CHECK_THAT(cauchy_combination(std::vector<double>{0.5, 0.5}).p_comb, WithinAbs(0.5, 1e-12));
    CHECK_THAT(cauchy_combination(std::vector<double>{0.05}).p_comb, WithinAbs(0.05, 1e-12));
    CHECK_THAT(cauchy_combination(std::vector<double>{0.01, 0.99}).p_comb, WithinAbs(0.5, 1e-12));
    for (double p : {1e-9, 0.001, 0.2, 0.7, 0.999}) {
        CHECK_THAT(cauchy_combination(std::vector<double>(11, p)).p_comb, WithinRel(p, 1e-9));
    }
    const auto c = cauchy_combination(std::vector<double>{0.4, 0.01, 0.01});
    CHECK(c.winner == 1);
    CHECK(cauchy_combination(std::vector<double>{0.0, 0.5}).p_comb < 1e-14);
}

TEST_CASE("combiners are permutation invariant and monotone") {
    StreamRng g(99, 1);
    for (int rep = 0; rep < 200; ++rep) {
        auto p = uniforms(12, g);
        for (CombineMethod m : {CombineMethod::bonf, CombineMethod::bh, CombineMethod::hmp, CombineMethod::cct}) {
            for (HmpCalibration cal : {HmpCalibration::direct, HmpCalibration::landau}) {
                const double base = combine(m, p, cal).p_comb;
                CHECK(base >= 0.0);
                CHECK(base <= 1.0);
                auto q = p;
                std::reverse(q.begin(), q.end());
                CHECK_THAT(combine(m, q, cal).p_comb, WithinAbs(base, 1e-12));
                auto lower = p;
                lower[rep % 12] *= 0.5;
                CHECK(combine(m, lower, cal).p_comb <= base + 1e-12);
            }
        }
        const double hm = harmonic_mean_p(p).harmonic_mean;
        CHECK(hm >= *std::min_element(p.begin(), p.end()));
    }
}

TEST_CASE("calibration under independence") {
    StreamRng g(4242, 0);
    int rej_bonf = 0, rej_bh = 0;
    const int reps = 2000;
    for (int rep = 0; rep < reps; ++rep) {
        const auto p = uniforms(200, g);
        rej_bonf += bonferroni(p).p_comb < 0.05;
        rej_bh += benjamini_hochberg(p).p_comb < 0.05;
    }
    CHECK(rej_bonf / double(reps) <= 0.06);
    CHECK(rej_bh / double(reps) <= 0.06);
}

TEST_CASE("landau tail matches Chambers-Mallows-Stuck sampling") {
    // alpha = 1, beta = 1, unit scale: S0 and S1 coincide.
    StreamRng g(31337, 0);
    const int draws = 200000;
    std::vector<double> xs(draws);
    const double half_pi = std::numbers::pi / 2.0;
    for (auto& x : xs) {
        const double v = std::numbers::pi * (g.uniform() - 0.5);
        double w = 0.0;
        while (w == 0.0) w = -std::log(1.0 - g.uniform());
        x = (2.0 / std::numbers::pi) * ((half_pi + v) * std::tan(v) - std::log(half_pi * w * std::cos(v) / (half_pi + v)));
    }
    for (double x : {-1.0, 0.0, 0.5, 2.0, 5.0, 20.0}) {
        const double emp = std::count_if(xs.begin(), xs.end(), [x](double s) { return s > x; }) / double(draws);
        const double sd = std::sqrt(emp * (1 - emp) / draws);
        CHECK_THAT(landau_upper_tail(x, 0.0, 1.0), WithinAbs(emp, 4 * sd + 1e-4));
    }
}

TEST_CASE("landau tail location, scale and asymptote") {
    CHECK_THAT(landau_upper_tail(3.0 + 2.0 * 1.5, 3.0, 2.0), WithinAbs(landau_upper_tail(1.5, 0.0, 1.0), 1e-8));
    // P(X > x) ~ (2/pi) scale / x, so with scale pi/2 the calibrated HMP tends to the harmonic mean.
    const double loc = std::log(200.0) + 0.874;
    for (double hm : {1e-4, 1e-6}) {
        CHECK_THAT(landau_upper_tail(1.0 / hm, loc, std::numbers::pi / 2.0), WithinRel(hm, 0.01));
    }
    double prev = 1.0;
    for (double x = -5.0; x < 50.0; x += 0.5) {
        const double t = landau_upper_tail(x, 0.0, 1.0);
        CHECK(t <= prev + 1e-12);
        prev = t;
    }
}

TEST_CASE("combine rejects invalid input") {
    CHECK_THROWS_AS(bonferroni(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(benjamini_hochberg(std::vector<double>{0.1, 1.2}), std::invalid_argument);
    CHECK_THROWS_AS(cauchy_combination(std::vector<double>{-0.1}), std::invalid_argument);
    CHECK_THROWS_AS(harmonic_mean_p(std::vector<double>{std::nan("")}), std::invalid_argument);
    CHECK(parse_method("bh") == CombineMethod::bh);
    CHECK_THROWS_AS(parse_method("fisher"), std::invalid_argument);
}
