#include "rpcp/simgen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "rpcp/rng.hpp"

namespace rpcp {

std::string_view to_string(NoiseSetting s) noexcept {
    switch (s) {
        case NoiseSetting::s1: return "S1";
        case NoiseSetting::s2: return "S2";
        case NoiseSetting::s3: return "S3";
    }
    return "?";
}

NoiseSetting parse_setting(std::string_view text) {
    if (text == "1" || text == "s1" || text == "S1") return NoiseSetting::s1;
    if (text == "2" || text == "s2" || text == "S2") return NoiseSetting::s2;
    if (text == "3" || text == "s3" || text == "S3") return NoiseSetting::s3;
    throw std::invalid_argument("unknown noise setting '" + std::string(text) + "' (expected 1, 2 or 3)");
}

void GeneratorConfig::validate() const {
    if (n < 2) throw std::invalid_argument("generator: n must be at least 2");
    if (grid_p < 2) throw std::invalid_argument("generator: grid_p must be at least 2");
    if (n_basis < 1) throw std::invalid_argument("generator: n_basis must be at least 1");
    if (m < 1 || m > n_basis) throw std::invalid_argument("generator: need 1 <= m <= n_basis");
    if (!(snr >= 0.0) || !std::isfinite(snr)) throw std::invalid_argument("generator: snr must be finite and >= 0");
    if (!(noise_scale >= 0.0)) throw std::invalid_argument("generator: noise_scale must be >= 0");
    if (!(theta > 0.0 && theta < 1.0)) {
        if (snr > 0.0) throw std::invalid_argument("generator: theta must lie in (0, 1) when snr > 0");
        if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("generator: theta must lie in [0, 1]");
    }
    if (snr > 0.0) {
        const auto z = static_cast<std::size_t>(std::floor(theta * static_cast<double>(n)));
        if (z < 1 || z > n - 1) throw std::invalid_argument("generator: floor(theta n) must lie in [1, n-1]");
    }
}

Matrix fourier_basis(std::size_t n_basis, std::size_t grid_p) {
    if (n_basis < 1 || grid_p < 2) {
        throw std::invalid_argument("fourier_basis: need n_basis >= 1 and grid_p >= 2");
    }
    Matrix basis(grid_p, n_basis);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < grid_p; ++i) {
        const double s = static_cast<double>(i + 1) / static_cast<double>(grid_p);
        basis(i, 0) = 1.0;
        for (std::size_t g = 1; g < n_basis; ++g) {
            // 0-based column g is v_{g+1}: odd g -> sin, even g -> cos, frequency (g+1)/2.
            const double freq = static_cast<double>((g + 1) / 2);
            basis(i, g) = std::numbers::sqrt2 * (g % 2 == 1 ? std::sin(two_pi * freq * s) : std::cos(two_pi * freq * s));
        }
    }
    return basis;
}

std::vector<double> sigma_schedule(NoiseSetting setting, std::size_t n_basis) {
    std::vector<double> sigma(n_basis, 0.0);
    for (std::size_t i = 0; i < n_basis; ++i) {
        const auto g = static_cast<double>(i + 1);
        switch (setting) {
            case NoiseSetting::s1: sigma[i] = i < 3 ? 1.0 : 0.0; break;
            case NoiseSetting::s2: sigma[i] = std::pow(3.0, -g); break;
            case NoiseSetting::s3: sigma[i] = 1.0 / g; break;
        }
    }
    return sigma;
}

double break_magnitude(double snr, double trace, double theta, std::size_t n_basis) {
    if (snr == 0.0) return 0.0;
    return snr * trace / (theta * (1.0 - theta) * std::sqrt(static_cast<double>(n_basis)));
}

GeneratedData generate(const GeneratorConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n, p = cfg.grid_p, nb = cfg.n_basis;
    const Matrix basis = fourier_basis(nb, p);
    const std::vector<double> sigma = sigma_schedule(cfg.setting, nb);

    GeneratedData out;
    out.coefficients = Matrix(n, nb);
    StreamRng rng(cfg.seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t g = 0; g < nb; ++g) {
            out.coefficients(t, g) = cfg.noise_scale * sigma[g] * normal(rng);
        }
    }

    // Trace of the sample covariance (denominator n - 1) of the coefficient draws.
    double trace = 0.0;
    for (std::size_t g = 0; g < nb; ++g) {
        double mean = 0.0;
        for (std::size_t t = 0; t < n; ++t) mean += out.coefficients(t, g);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double d = out.coefficients(t, g) - mean;
            ss += d * d;
        }
        trace += ss / static_cast<double>(n - 1);
    }
    out.trace_cov = trace;

    out.brk.m = cfg.m;
    out.brk.c = break_magnitude(cfg.snr, trace, cfg.theta, nb);
    out.brk.delta_grid.assign(p, 0.0);
    if (out.brk.c > 0.0) {
        const double amp = std::sqrt(out.brk.c) / std::sqrt(static_cast<double>(cfg.m));
        for (std::size_t i = 0; i < p; ++i) {
            double s = 0.0;
            for (std::size_t g = 0; g < cfg.m; ++g) s += basis(i, g);
            out.brk.delta_grid[i] = amp * s;
        }
    }
    out.true_z = static_cast<std::size_t>(std::floor(cfg.theta * static_cast<double>(n)));

    Matrix x(n, p);
    for (std::size_t t = 0; t < n; ++t) {
        const bool after = t + 1 > out.true_z && out.brk.c > 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            double v = after ? out.brk.delta_grid[i] : 0.0;
            for (std::size_t g = 0; g < nb; ++g) v += out.coefficients(t, g) * basis(i, g);
            x(t, i) = v;
        }
    }
    out.data = DataMatrix(std::move(x));
    return out;
}

}  // namespace rpcp
