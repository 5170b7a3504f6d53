#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "rpcp/matrix.hpp"

namespace rpcp {

/// Decay of the basis-coefficient standard deviations sigma_g.
enum class NoiseSetting {
    s1,  // sigma_g = 1 for g <= 3, else 0
    s2,  // sigma_g = 3^-g
    s3,  // sigma_g = 1/g
};

std::string_view to_string(NoiseSetting s) noexcept;
/// Accepts "1", "2", "3", "s1", "S1", ...
NoiseSetting parse_setting(std::string_view text);

struct GeneratorConfig {
    std::size_t n = 50;
    std::size_t grid_p = 101;
    std::size_t n_basis = 21;
    NoiseSetting setting = NoiseSetting::s1;
    std::size_t m = 5;
    double snr = 0.0;
    double theta = 0.25;
    std::uint64_t seed = 0;
    /// Multiplies every sigma_g; 1 reproduces the published settings.
    double noise_scale = 1.0;

    void validate() const;
};

struct BreakSpec {
    std::size_t m = 0;
    double c = 0.0;                 // squared L2 magnitude of delta
    std::vector<double> delta_grid;  // delta(s_j), j = 1..grid_p
};

struct GeneratedData {
    DataMatrix data;
    std::size_t true_z = 0;  // floor(theta * n)
    BreakSpec brk;
    double trace_cov = 0.0;  // trace of the sample covariance of the coefficients
    Matrix coefficients;     // n x n_basis draws A_{t,g}
};

/// grid_p x n_basis matrix: v_1 = 1, v_{2j} = sqrt2 sin(2 pi j s),
/// v_{2j+1} = sqrt2 cos(2 pi j s), evaluated at s = j / grid_p, j = 1..grid_p.
Matrix fourier_basis(std::size_t n_basis, std::size_t grid_p);

std::vector<double> sigma_schedule(NoiseSetting setting, std::size_t n_basis);

/// c = snr * trace / (theta (1 - theta) sqrt(n_basis)).
double break_magnitude(double snr, double trace, double theta, std::size_t n_basis);

/// Functional-data draw X_t(s_j) = delta(s_j) 1{t > z*} + sum_g A_{t,g} v_g(s_j).
GeneratedData generate(const GeneratorConfig& cfg);

}  // namespace rpcp
