#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace rpcp {

enum class CombineMethod { bonf, bh, hmp, cct };

/// How the harmonic mean p-value is turned into p_comb.
enum class HmpCalibration {
    direct,  // p_comb = harmonic mean itself, compared with alpha as is
    landau,  // p_comb = Landau upper tail of 1 / harmonic mean
};

std::string_view to_string(CombineMethod m) noexcept;
CombineMethod parse_method(std::string_view text);
std::string_view to_string(HmpCalibration c) noexcept;
HmpCalibration parse_hmp_calibration(std::string_view text);

/// Outcome of adjusting / combining k per-projection p-values.
struct CombinedResult {
    CombineMethod method = CombineMethod::bonf;
    /// Per-test adjusted p-values in input order; empty for hmp and cct.
    std::vector<double> adjusted;
    double p_comb = 1.0;
    /// 0-based index of the smallest adjusted (bonf, bh) or raw (hmp, cct)
    /// p-value; ties go to the smallest index.
    std::size_t winner = 0;
    /// Harmonic mean of the raw p-values (hmp only).
    double harmonic_mean = 0.0;
};

CombinedResult bonferroni(std::span<const double> raw);
CombinedResult benjamini_hochberg(std::span<const double> raw);
CombinedResult harmonic_mean_p(std::span<const double> raw, HmpCalibration calibration = HmpCalibration::direct);
CombinedResult cauchy_combination(std::span<const double> raw);

CombinedResult combine(CombineMethod method, std::span<const double> raw,
                       HmpCalibration calibration = HmpCalibration::direct);

/// P(X > x) for the maximally right-skewed alpha = 1 stable law in Nolan's S0
/// parameterisation with the given location and scale (the Landau law used
/// to calibrate the harmonic mean p-value).
double landau_upper_tail(double x, double location, double scale);

}  // namespace rpcp
