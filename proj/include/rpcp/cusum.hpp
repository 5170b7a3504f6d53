#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rpcp {

enum class CusumVariant { standard, weighted };
enum class VarianceKind { split, hac };

std::string_view to_string(CusumVariant v) noexcept;
std::string_view to_string(VarianceKind v) noexcept;
/// Accepts "cusum"/"standard" and "weighted".
CusumVariant parse_variant(std::string_view text);
/// Accepts "split" and "hac".
VarianceKind parse_variance(std::string_view text);

/// Trimming rule for the candidate window [l, n - l].
struct TrimSpec {
    enum class Rule { none, n_quarter, log_n, sqrt_n, fixed };

    Rule rule = Rule::log_n;
    std::size_t fixed_trim = 1;  // used when rule == fixed

    static TrimSpec none() { return {Rule::none, 1}; }
    static TrimSpec fixed(std::size_t trim) { return {Rule::fixed, trim}; }

    /// Resolved integer trim l for sample size n. Throws std::invalid_argument
    /// unless 1 <= l < n/2.
    std::size_t resolve(std::size_t n) const;

    /// "1", "n025", "logn", "sqrtn", or a positive integer for an explicit l.
    static TrimSpec parse(std::string_view text);
    std::string label() const;

    bool operator==(const TrimSpec&) const = default;
};

struct CusumProfile {
    std::vector<double> stats;  // stats[i] is T_z for z = z_lo + i
    std::size_t z_lo = 1;
    std::size_t z_hi = 1;
    double sup_stat = 0.0;
    std::size_t arg_sup = 1;  // smallest maximising z
    CusumVariant variant = CusumVariant::standard;
    VarianceKind variance_kind = VarianceKind::split;
    /// Some z had zero variance and a positive numerator; its statistic is +inf.
    bool degenerate_certain = false;
    /// Every numerator was zero (e.g. constant series); all statistics are 0.
    bool degenerate_flat = false;

    double at(std::size_t z) const { return stats.at(z - z_lo); }
};

/// (1/n) [ SS of y[0..z) about its mean + SS of y[z..n) about its mean ].
/// Requires 1 <= z <= n-1.
double split_variance(std::span<const double> y, std::size_t z);

struct HacEstimate {
    double variance = 0.0;
    double bandwidth = 0.0;  // Andrews AR(1) plug-in S
    double rho = 0.0;        // clipped lag-1 autocorrelation
    bool degenerate = false;  // constant series
};

/// Bartlett-kernel long-run variance with the Andrews AR(1) plug-in bandwidth.
/// Requires n >= 4.
HacEstimate hac_variance(std::span<const double> y);

/// Standard or weighted CUSUM profile over the trimmed window. The standard
/// variant always scans z in [1, n-1] regardless of the trim rule.
CusumProfile cusum_profile(std::span<const double> y, CusumVariant variant, VarianceKind variance,
                           const TrimSpec& trim);

/// Window half-width actually used for a given variant.
std::size_t effective_trim(CusumVariant variant, const TrimSpec& trim, std::size_t n);

/// P(sup_{0<=x<=1} |B(x)| > x) for a standard Brownian bridge.
double standard_pvalue(double sup_stat);

/// Simulated law of the supremum of the (weighted) Brownian bridge on
/// [trim_fraction, 1 - trim_fraction].
struct NullDistribution {
    CusumVariant variant = CusumVariant::weighted;
    double trim_fraction = 0.0;
    std::size_t replications = 0;
    std::size_t increments = 0;
    std::uint64_t seed = 0;
    std::vector<double> samples;  // ascending

    /// Order statistic at ceil(q * N), q in (0, 1].
    double quantile(double q) const;
    bool operator==(const NullDistribution&) const = default;
};

/// Requires replications >= 1000, increments >= 100, 0 <= trim < 1/2 and
/// trim > 0 for the weighted variant. Replication i draws from stream i of
/// `seed`; `threads` = 0 uses the hardware concurrency.
NullDistribution simulate_null(CusumVariant variant, double trim_fraction, std::size_t replications,
                               std::size_t increments, std::uint64_t seed, unsigned threads = 0);

/// (1 + #{samples >= sup_stat}) / (replications + 1). The null must be
/// weighted and its trim fraction must equal `trim_fraction` to 1e-6.
double weighted_pvalue(double sup_stat, const NullDistribution& null, double trim_fraction);

/// Trim fraction a weighted profile with trim l on n points consumes.
inline double matching_trim_fraction(std::size_t trim, std::size_t n) {
    return static_cast<double>(trim) / static_cast<double>(n);
}

}  // namespace rpcp
