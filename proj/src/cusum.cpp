#include "rpcp/cusum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "rpcp/parallel.hpp"
#include "rpcp/rng.hpp"

namespace rpcp {

std::string_view to_string(CusumVariant v) noexcept {
    return v == CusumVariant::standard ? "cusum" : "weighted";
}

std::string_view to_string(VarianceKind v) noexcept {
    return v == VarianceKind::split ? "split" : "hac";
}

CusumVariant parse_variant(std::string_view text) {
    if (text == "cusum" || text == "standard") return CusumVariant::standard;
    if (text == "weighted") return CusumVariant::weighted;
    throw std::invalid_argument("unknown CUSUM variant '" + std::string(text) + "' (expected cusum or weighted)");
}

VarianceKind parse_variance(std::string_view text) {
    if (text == "split") return VarianceKind::split;
    if (text == "hac") return VarianceKind::hac;
    throw std::invalid_argument("unknown variance estimator '" + std::string(text) + "' (expected split or hac)");
}

namespace {

// floor(n^(1/root)) with integer correction for exact powers.
std::size_t integer_root(std::size_t n, int root) {
    auto power = [root](std::size_t b) {
        std::size_t v = 1;
        for (int i = 0; i < root; ++i) v *= b;
        return v;
    };
    auto r = static_cast<std::size_t>(std::pow(static_cast<double>(n), 1.0 / root));
    while (power(r + 1) <= n) ++r;
    while (r > 0 && power(r) > n) --r;
    return r;
}

}  // namespace

std::size_t TrimSpec::resolve(std::size_t n) const {
    std::size_t trim = 1;
    switch (rule) {
        case Rule::none: trim = 1; break;
        case Rule::n_quarter: trim = integer_root(n, 4); break;
        case Rule::log_n: trim = static_cast<std::size_t>(std::floor(std::log(static_cast<double>(n)))); break;
        case Rule::sqrt_n: trim = integer_root(n, 2); break;
        case Rule::fixed: trim = fixed_trim; break;
    }
    if (trim < 1 || 2 * trim >= n) {
        throw std::invalid_argument("trim " + std::to_string(trim) + " (rule " + label() +
                                    ") is invalid for n = " + std::to_string(n) + "; need 1 <= trim < n/2");
    }
    return trim;
}

TrimSpec TrimSpec::parse(std::string_view text) {
    if (text == "1" || text == "none") return none();
    if (text == "n025") return {Rule::n_quarter, 1};
    if (text == "logn") return {Rule::log_n, 1};
    if (text == "sqrtn") return {Rule::sqrt_n, 1};
    std::size_t value = 0;
    bool digits = !text.empty();
    for (char c : text) {
        if (c < '0' || c > '9') {
            digits = false;
            break;
        }
        value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    if (!digits || value == 0) {
        throw std::invalid_argument("unknown trim '" + std::string(text) +
                                    "' (expected 1, n025, logn, sqrtn or a positive integer)");
    }
    return fixed(value);
}

std::string TrimSpec::label() const {
    switch (rule) {
        case Rule::none: return "1";
        case Rule::n_quarter: return "n025";
        case Rule::log_n: return "logn";
        case Rule::sqrt_n: return "sqrtn";
        case Rule::fixed: return std::to_string(fixed_trim);
    }
    return "?";
}

double split_variance(std::span<const double> y, std::size_t z) {
    const std::size_t n = y.size();
    if (z < 1 || z >= n) {
        throw std::invalid_argument("split_variance: need 1 <= z <= n-1");
    }
    auto segment_ss = [](std::span<const double> seg) {
        double mean = 0.0;
        for (double v : seg) mean += v;
        mean /= static_cast<double>(seg.size());
        double ss = 0.0;
        for (double v : seg) ss += (v - mean) * (v - mean);
        return ss;
    };
    return (segment_ss(y.first(z)) + segment_ss(y.subspan(z))) / static_cast<double>(n);
}

namespace {

double max_abs(std::span<const double> y) {
    double m = 0.0;
    for (double v : y) m = std::max(m, std::abs(v));
    return m;
}

// Values below this fraction of the data amplitude are treated as rounding noise.
constexpr double kRelativeZero = 1e-12;

}  // namespace

HacEstimate hac_variance(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 4) {
        throw std::invalid_argument("hac_variance: need at least 4 observations");
    }
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> c(n);
    for (std::size_t t = 0; t < n; ++t) c[t] = y[t] - mean;

    auto autocov = [&](std::size_t h) {
        double s = 0.0;
        for (std::size_t t = h; t < n; ++t) s += c[t] * c[t - h];
        return s / static_cast<double>(n);
    };

    HacEstimate est;
    const double gamma0 = autocov(0);
    const double floor_scale = kRelativeZero * max_abs(y);
    if (gamma0 <= floor_scale * floor_scale) {
        est.degenerate = true;
        return est;
    }
    est.rho = std::clamp(autocov(1) / gamma0, -0.97, 0.97);
    const double rho = est.rho;
    const double alpha = 4.0 * rho * rho / ((1.0 - rho) * (1.0 - rho) * (1.0 + rho) * (1.0 + rho));
    est.bandwidth = 1.1447 * std::cbrt(alpha * static_cast<double>(n));
    const auto lags = std::min<std::size_t>(static_cast<std::size_t>(std::floor(est.bandwidth)), n - 1);
    double lrv = gamma0;
    for (std::size_t h = 1; h <= lags; ++h) {
        lrv += 2.0 * (1.0 - static_cast<double>(h) / (est.bandwidth + 1.0)) * autocov(h);
    }
    est.variance = std::max(lrv, 1e-8 * gamma0);
    return est;
}

std::size_t effective_trim(CusumVariant variant, const TrimSpec& trim, std::size_t n) {
    return variant == CusumVariant::standard ? TrimSpec::none().resolve(n) : trim.resolve(n);
}

CusumProfile cusum_profile(std::span<const double> y, CusumVariant variant, VarianceKind variance,
                           const TrimSpec& trim) {
    const std::size_t n = y.size();
    if (n < 4) {
        throw std::invalid_argument("cusum_profile: need at least 4 observations");
    }
    const std::size_t l = effective_trim(variant, trim, n);
    const auto nd = static_cast<double>(n);

    CusumProfile prof;
    prof.variant = variant;
    prof.variance_kind = variance;
    prof.z_lo = l;
    prof.z_hi = n - l;

    const double amp = max_abs(y);
    const double var_floor = (kRelativeZero * amp) * (kRelativeZero * amp);
    const double num_floor = kRelativeZero * amp * nd;

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= nd;

    // Partial sums of the centred series; S_n is ~0 but kept for exactness of the formula.
    std::vector<double> centred(n);
    for (std::size_t t = 0; t < n; ++t) centred[t] = y[t] - mean;
    std::vector<double> partial(n + 1, 0.0);
    for (std::size_t t = 0; t < n; ++t) partial[t + 1] = partial[t] + centred[t];
    const double total = partial[n];

    // Per-z split variances from forward and backward Welford passes.
    std::vector<double> m2_head, m2_tail;
    double hac = 0.0;
    if (variance == VarianceKind::split) {
        m2_head.assign(n + 1, 0.0);
        m2_tail.assign(n + 1, 0.0);
        double mu = 0.0, m2 = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double delta = centred[t] - mu;
            mu += delta / static_cast<double>(t + 1);
            m2 += delta * (centred[t] - mu);
            m2_head[t + 1] = m2;
        }
        mu = 0.0;
        m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t t = n - 1 - i;
            const double delta = centred[t] - mu;
            mu += delta / static_cast<double>(i + 1);
            m2 += delta * (centred[t] - mu);
            m2_tail[t] = m2;
        }
    } else {
        const HacEstimate est = hac_variance(y);
        hac = est.degenerate ? 0.0 : est.variance;
    }

    prof.stats.resize(prof.z_hi - prof.z_lo + 1);
    bool any_numerator = false;
    for (std::size_t z = prof.z_lo; z <= prof.z_hi; ++z) {
        const auto zd = static_cast<double>(z);
        const double num = std::abs(partial[z] - zd / nd * total);
        const double var = variance == VarianceKind::split ? (m2_head[z] + m2_tail[z]) / nd : hac;
        const bool num_zero = num <= num_floor;
        any_numerator = any_numerator || !num_zero;
        double stat = 0.0;
        if (var <= var_floor) {
            if (!num_zero) {
                stat = std::numeric_limits<double>::infinity();
                prof.degenerate_certain = true;
            }
        } else {
            const double weight =
                variant == CusumVariant::standard ? 1.0 / std::sqrt(nd) : std::sqrt(nd / (zd * (nd - zd)));
            stat = weight * num / std::sqrt(var);
        }
        prof.stats[z - prof.z_lo] = stat;
    }
    prof.degenerate_flat = !any_numerator;

    const auto best = std::max_element(prof.stats.begin(), prof.stats.end());
    prof.sup_stat = *best;
    prof.arg_sup = prof.z_lo + static_cast<std::size_t>(best - prof.stats.begin());
    return prof;
}

double standard_pvalue(double x) {
    if (std::isnan(x)) {
        throw std::invalid_argument("standard_pvalue: NaN statistic");
    }
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    double p = 0.0;
    if (x >= 0.5) {
        // 2 sum_{j>=1} (-1)^{j+1} exp(-2 j^2 x^2)
        for (int j = 1; j <= 100; ++j) {
            const double term = std::exp(-2.0 * j * j * x * x);
            p += (j % 2 == 1 ? 2.0 : -2.0) * term;
            if (term < 1e-12 * std::max(p, 1e-300) || term == 0.0) break;
        }
    } else {
        // Jacobi-transformed form, converges fast for small x:
        // 1 - sqrt(2 pi)/x sum_{j>=1} exp(-(2j-1)^2 pi^2 / (8 x^2))
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int j = 1; j <= 100; ++j) {
            const double odd = 2.0 * j - 1.0;
            const double term = std::exp(-odd * odd * pi2 / (8.0 * x * x));
            cdf += term;
            if (term < 1e-16 * cdf || term == 0.0) break;
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
        p = 1.0 - cdf;
    }
    return std::clamp(p, std::numeric_limits<double>::denorm_min(), 1.0);
}

double NullDistribution::quantile(double q) const {
    if (samples.empty()) {
        throw std::logic_error("NullDistribution::quantile: no samples");
    }
    if (!(q > 0.0 && q <= 1.0)) {
        throw std::invalid_argument("NullDistribution::quantile: q must be in (0, 1]");
    }
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
    idx = std::clamp<std::size_t>(idx, 1, samples.size());
    return samples[idx - 1];
}

NullDistribution simulate_null(CusumVariant variant, double trim_fraction, std::size_t replications,
                               std::size_t increments, std::uint64_t seed, unsigned threads) {
    if (replications < 1000) {
        throw std::invalid_argument("simulate_null: need at least 1000 replications");
    }
    if (increments < 100) {
        throw std::invalid_argument("simulate_null: need at least 100 increments");
    }
    if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
        throw std::invalid_argument("simulate_null: trim fraction must lie in [0, 1/2)");
    }
    if (variant == CusumVariant::weighted && trim_fraction == 0.0) {
        throw std::invalid_argument("simulate_null: weighted variant needs a positive trim fraction");
    }

    NullDistribution null;
    null.variant = variant;
    null.trim_fraction = trim_fraction;
    null.replications = replications;
    null.increments = increments;
    null.seed = seed;
    null.samples.resize(replications);

    const std::size_t m = increments;
    const auto md = static_cast<double>(m);
    auto lo = static_cast<std::size_t>(std::ceil(trim_fraction * md - 1e-9));
    if (variant == CusumVariant::weighted) lo = std::max<std::size_t>(lo, 1);
    const std::size_t hi = m - lo;
    const double step_sd = 1.0 / std::sqrt(md);

    // Pre-computed weights 1/sqrt(x(1-x)) on the grid.
    std::vector<double> weight(m + 1, 1.0);
    if (variant == CusumVariant::weighted) {
        for (std::size_t i = lo; i <= hi; ++i) {
            const double x = static_cast<double>(i) / md;
            weight[i] = 1.0 / std::sqrt(x * (1.0 - x));
        }
    }

    auto one = [&](std::size_t rep, std::vector<double>& w) {
        StreamRng rng(seed, rep);
        std::normal_distribution<double> normal(0.0, step_sd);
        w[0] = 0.0;
        for (std::size_t i = 1; i <= m; ++i) w[i] = w[i - 1] + normal(rng);
        const double end = w[m];
        double sup = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) {
            const double bridge = std::abs(w[i] - static_cast<double>(i) / md * end) * weight[i];
            sup = std::max(sup, bridge);
        }
        null.samples[rep] = sup;
    };

    const std::size_t chunk = 256;
    const std::size_t chunks = (replications + chunk - 1) / chunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        std::vector<double> w(m + 1);
        const std::size_t end = std::min(replications, (c + 1) * chunk);
        for (std::size_t rep = c * chunk; rep < end; ++rep) one(rep, w);
    });

    std::sort(null.samples.begin(), null.samples.end());
    return null;
}

double weighted_pvalue(double sup_stat, const NullDistribution& null, double trim_fraction) {
    if (null.variant != CusumVariant::weighted) {
        throw std::invalid_argument("weighted_pvalue: null distribution is not for the weighted variant");
    }
    if (std::abs(null.trim_fraction - trim_fraction) > 1e-6) {
        throw std::invalid_argument("weighted_pvalue: null trim fraction " + std::to_string(null.trim_fraction) +
                                    " does not match profile trim fraction " + std::to_string(trim_fraction));
    }
    if (std::isnan(sup_stat)) {
        throw std::invalid_argument("weighted_pvalue: NaN statistic");
    }
    if (null.samples.size() != null.replications || null.samples.empty()) {
        throw std::invalid_argument("weighted_pvalue: null distribution has inconsistent sample count");
    }
    const auto first_ge = std::lower_bound(null.samples.begin(), null.samples.end(), sup_stat);
    const auto exceed = static_cast<double>(null.samples.end() - first_ge);
    return (1.0 + exceed) / (static_cast<double>(null.replications) + 1.0);
}

}  // namespace rpcp
