#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "rpcp/combine.hpp"
#include "rpcp/cusum.hpp"
#include "rpcp/matrix.hpp"
#include "rpcp/projection.hpp"

namespace rpcp {

struct DetectorConfig {
    std::size_t k = 200;
    CusumVariant variant = CusumVariant::standard;
    VarianceKind variance = VarianceKind::split;
    TrimSpec trim = TrimSpec{TrimSpec::Rule::log_n, 1};
    CombineMethod method = CombineMethod::bonf;
    HmpCalibration hmp_calibration = HmpCalibration::direct;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    /// Keep the per-projection audit table in the report.
    bool keep_per_projection = false;
    /// Simulated law for the weighted variant; its trim fraction must equal l/n.
    std::shared_ptr<const NullDistribution> weighted_null;
    /// Threads for the per-projection tests (1 = serial, 0 = hardware).
    unsigned threads = 1;

    /// Throws std::invalid_argument unless alpha in (0, 1] and k >= 1.
    void validate() const;
};

struct ProjectionRow {
    double raw_p = 1.0;
    double adjusted_p = 1.0;  // NaN for hmp and cct
    double sup_stat = 0.0;
    std::size_t arg_sup = 0;

    bool operator==(const ProjectionRow&) const = default;
};

struct DetectionReport {
    double p_comb = 1.0;
    bool significant = false;
    std::size_t z_hat = 0;
    double theta_hat = 0.0;
    std::size_t winner = 0;  // 0-based projection index
    std::size_t n = 0;
    std::size_t trim = 1;  // resolved window half-width
    /// Every profile was flat (all numerators zero); z_hat is the window midpoint.
    bool degenerate = false;
    std::vector<ProjectionRow> per_projection;

    bool operator==(const DetectionReport&) const = default;
};

/// Per-projection CUSUM results before combination.
struct ProjectionTests {
    std::size_t n = 0;
    std::size_t trim = 1;
    std::vector<CusumProfile> profiles;
    std::vector<double> raw_p;
};

/// Steps 1 and 2a: project and test every projected series.
ProjectionTests run_projection_tests(const DataMatrix& x, const ProjectionMatrix& d, const DetectorConfig& cfg);

/// Step 2b: combine, pick the winning projection and its location.
DetectionReport finalize(const ProjectionTests& tests, CombineMethod method, double alpha, bool keep_per_projection,
                         HmpCalibration hmp_calibration = HmpCalibration::direct);

/// Full pipeline with directions drawn from cfg.seed.
DetectionReport detect(const DataMatrix& x, const DetectorConfig& cfg);
/// Full pipeline with caller-supplied directions (cfg.seed and cfg.k are ignored).
DetectionReport detect_with(const DataMatrix& x, const ProjectionMatrix& d, const DetectorConfig& cfg);

struct RepetitionSummary {
    std::vector<std::size_t> locations;
    std::vector<bool> significant_mask;
    std::size_t mode = 0;
    std::size_t mode_count = 0;
    std::map<std::size_t, std::size_t> histogram;

    std::size_t significant_count() const;
    /// Mode over significant repetitions only; empty if none were significant.
    std::optional<std::size_t> significant_mode() const;

    bool operator==(const RepetitionSummary&) const = default;
};

/// Histogram and mode (smallest location on ties). Requires a non-empty list.
RepetitionSummary summarize_locations(std::vector<std::size_t> locations, std::vector<bool> significant_mask);

/// Seed for repetition `index` of a repeated run under `seed`.
std::uint64_t repetition_seed(std::uint64_t seed, std::size_t index);

/// Runs detect R times, repetition i using repetition_seed(cfg.seed, i).
/// `threads` parallelises across repetitions (0 = hardware).
RepetitionSummary detect_repeated(const DataMatrix& x, const DetectorConfig& cfg, std::size_t repetitions,
                                  unsigned threads = 1);

}  // namespace rpcp
