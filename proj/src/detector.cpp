#include "rpcp/detector.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rpcp/parallel.hpp"
#include "rpcp/rng.hpp"

namespace rpcp {

void DetectorConfig::validate() const {
    if (k == 0) throw std::invalid_argument("detector: k must be at least 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("detector: alpha must lie in (0, 1]");
}

ProjectionTests run_projection_tests(const DataMatrix& x, const ProjectionMatrix& d, const DetectorConfig& cfg) {
    cfg.validate();
    const std::size_t n = x.n();
    if (n < 4) {
        throw std::invalid_argument("detector: need at least 4 time points, got " + std::to_string(n));
    }
    ProjectionTests tests;
    tests.n = n;
    tests.trim = effective_trim(cfg.variant, cfg.trim, n);
    if (n < 2 * tests.trim + 2) {
        throw std::invalid_argument("detector: series of length " + std::to_string(n) + " too short for trim " +
                                    std::to_string(tests.trim));
    }
    const double trim_fraction = matching_trim_fraction(tests.trim, n);
    if (cfg.variant == CusumVariant::weighted) {
        if (!cfg.weighted_null) {
            throw std::invalid_argument("detector: weighted CUSUM needs a simulated null distribution");
        }
        // Validates variant and trim agreement up front.
        (void)weighted_pvalue(0.0, *cfg.weighted_null, trim_fraction);
    }

    const ProjectedSeries y = project(x, d);
    tests.profiles.resize(d.k());
    tests.raw_p.resize(d.k());
    parallel_for(d.k(), cfg.threads, [&](std::size_t r) {
        tests.profiles[r] = cusum_profile(y.series(r), cfg.variant, cfg.variance, cfg.trim);
        const double sup = tests.profiles[r].sup_stat;
        tests.raw_p[r] = cfg.variant == CusumVariant::standard ? standard_pvalue(sup)
                                                               : weighted_pvalue(sup, *cfg.weighted_null, trim_fraction);
    });
    return tests;
}

DetectionReport finalize(const ProjectionTests& tests, CombineMethod method, double alpha, bool keep_per_projection,
                         HmpCalibration hmp_calibration) {
    const CombinedResult combined = combine(method, tests.raw_p, hmp_calibration);
    DetectionReport report;
    report.n = tests.n;
    report.trim = tests.trim;
    report.p_comb = combined.p_comb;
    report.significant = combined.p_comb < alpha;
    report.winner = combined.winner;

    bool all_flat = true;
    for (const auto& prof : tests.profiles) all_flat = all_flat && prof.degenerate_flat;
    if (all_flat) {
        report.degenerate = true;
        report.z_hat = (tests.trim + (tests.n - tests.trim)) / 2;
    } else {
        report.z_hat = tests.profiles[combined.winner].arg_sup;
    }
    report.theta_hat = static_cast<double>(report.z_hat) / static_cast<double>(tests.n);

    if (keep_per_projection) {
        report.per_projection.resize(tests.raw_p.size());
        for (std::size_t r = 0; r < tests.raw_p.size(); ++r) {
            auto& row = report.per_projection[r];
            row.raw_p = tests.raw_p[r];
            row.adjusted_p =
                combined.adjusted.empty() ? std::numeric_limits<double>::quiet_NaN() : combined.adjusted[r];
            row.sup_stat = tests.profiles[r].sup_stat;
            row.arg_sup = tests.profiles[r].arg_sup;
        }
    }
    return report;
}

DetectionReport detect_with(const DataMatrix& x, const ProjectionMatrix& d, const DetectorConfig& cfg) {
    return finalize(run_projection_tests(x, d, cfg), cfg.method, cfg.alpha, cfg.keep_per_projection,
                    cfg.hmp_calibration);
}

DetectionReport detect(const DataMatrix& x, const DetectorConfig& cfg) {
    cfg.validate();
    if (x.p() == 0) throw std::invalid_argument("detector: data has no columns");
    return detect_with(x, generate_directions(x.p(), cfg.k, cfg.seed), cfg);
}

std::size_t RepetitionSummary::significant_count() const {
    std::size_t c = 0;
    for (bool s : significant_mask) c += s ? 1 : 0;
    return c;
}

std::optional<std::size_t> RepetitionSummary::significant_mode() const {
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t i = 0; i < locations.size(); ++i) {
        if (significant_mask[i]) ++counts[locations[i]];
    }
    if (counts.empty()) return std::nullopt;
    std::size_t best = counts.begin()->first, best_count = 0;
    for (const auto& [loc, c] : counts) {
        if (c > best_count) {
            best = loc;
            best_count = c;
        }
    }
    return best;
}

RepetitionSummary summarize_locations(std::vector<std::size_t> locations, std::vector<bool> significant_mask) {
    if (locations.empty()) throw std::invalid_argument("summarize_locations: no locations");
    if (significant_mask.size() != locations.size()) {
        throw std::invalid_argument("summarize_locations: mask length differs from location count");
    }
    RepetitionSummary s;
    for (std::size_t loc : locations) ++s.histogram[loc];
    // Ascending map iteration with strict '>' keeps the smallest location on ties.
    for (const auto& [loc, c] : s.histogram) {
        if (c > s.mode_count) {
            s.mode = loc;
            s.mode_count = c;
        }
    }
    s.locations = std::move(locations);
    s.significant_mask = std::move(significant_mask);
    return s;
}

std::uint64_t repetition_seed(std::uint64_t seed, std::size_t index) {
    return derive_seed(seed, {0x7265700000000000ULL, index});
}

RepetitionSummary detect_repeated(const DataMatrix& x, const DetectorConfig& cfg, std::size_t repetitions,
                                  unsigned threads) {
    if (repetitions == 0) throw std::invalid_argument("detect_repeated: need at least one repetition");
    std::vector<std::size_t> locations(repetitions);
    std::vector<char> significant(repetitions);
    parallel_for(repetitions, threads, [&](std::size_t i) {
        DetectorConfig rep = cfg;
        rep.seed = repetition_seed(cfg.seed, i);
        rep.keep_per_projection = false;
        const DetectionReport r = detect(x, rep);
        locations[i] = r.z_hat;
        significant[i] = r.significant ? 1 : 0;
    });
    return summarize_locations(std::move(locations), std::vector<bool>(significant.begin(), significant.end()));
}

}  // namespace rpcp
