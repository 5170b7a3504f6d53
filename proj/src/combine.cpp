#include "rpcp/combine.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rpcp {

std::string_view to_string(CombineMethod m) noexcept {
    switch (m) {
        case CombineMethod::bonf: return "bonf";
        case CombineMethod::bh: return "bh";
        case CombineMethod::hmp: return "hmp";
        case CombineMethod::cct: return "cct";
    }
    return "?";
}

CombineMethod parse_method(std::string_view text) {
    if (text == "bonf") return CombineMethod::bonf;
    if (text == "bh") return CombineMethod::bh;
    if (text == "hmp") return CombineMethod::hmp;
    if (text == "cct") return CombineMethod::cct;
    throw std::invalid_argument("unknown combination method '" + std::string(text) +
                                "' (expected bonf, bh, hmp or cct)");
}

std::string_view to_string(HmpCalibration c) noexcept {
    return c == HmpCalibration::direct ? "direct" : "landau";
}

HmpCalibration parse_hmp_calibration(std::string_view text) {
    if (text == "direct") return HmpCalibration::direct;
    if (text == "landau") return HmpCalibration::landau;
    throw std::invalid_argument("unknown HMP calibration '" + std::string(text) + "' (expected direct or landau)");
}

namespace {

void validate(std::span<const double> raw, const char* who) {
    if (raw.empty()) {
        throw std::invalid_argument(std::string(who) + ": no p-values");
    }
    for (double p : raw) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument(std::string(who) + ": p-value outside [0, 1]");
        }
    }
}

std::size_t argmin(std::span<const double> values) {
    return static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
}

void finish_adjusted(CombinedResult& out) {
    out.winner = argmin(out.adjusted);
    out.p_comb = out.adjusted[out.winner];
}

}  // namespace

CombinedResult bonferroni(std::span<const double> raw) {
    validate(raw, "bonferroni");
    CombinedResult out;
    out.method = CombineMethod::bonf;
    const auto k = static_cast<double>(raw.size());
    out.adjusted.reserve(raw.size());
    for (double p : raw) out.adjusted.push_back(std::min(1.0, k * p));
    finish_adjusted(out);
    return out;
}

CombinedResult benjamini_hochberg(std::span<const double> raw) {
    validate(raw, "benjamini_hochberg");
    const std::size_t k = raw.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });

    CombinedResult out;
    out.method = CombineMethod::bh;
    out.adjusted.assign(k, 1.0);
    // Running minimum of k p_(h) / h from the largest rank down.
    double running = 1.0;
    for (std::size_t h = k; h >= 1; --h) {
        const std::size_t idx = order[h - 1];
        running = std::min(running, static_cast<double>(k) * raw[idx] / static_cast<double>(h));
        out.adjusted[idx] = running;
    }
    finish_adjusted(out);
    return out;
}

double landau_upper_tail(double x, double location, double scale) {
    if (!(scale > 0.0)) {
        throw std::invalid_argument("landau_upper_tail: scale must be positive");
    }
    if (std::isnan(x)) {
        throw std::invalid_argument("landau_upper_tail: NaN argument");
    }
    if (x == std::numeric_limits<double>::infinity()) return 0.0;
    if (x == -std::numeric_limits<double>::infinity()) return 1.0;
    const double z = (x - location) / scale;
    constexpr double pi = std::numbers::pi;
    // Nolan's integral for alpha = 1, beta = 1 with u = theta + pi/2 in (0, pi):
    //   P(Z > z) = (1/pi) int_0^pi [1 - exp(-exp(-pi z / 2) V(u))] du,
    //   V(u) = (2/pi) (u / sin u) exp(-u cot u).
    const double shift = -pi * z / 2.0;
    auto log_v = [](double u) { return std::log(2.0 / pi) + std::log(u / std::sin(u)) - u * std::cos(u) / std::sin(u); };
    auto integrand = [&](double u) { return -std::expm1(-std::exp(shift + log_v(u))); };
    // log V increases from log(2/pi) - 1 to +inf, so the integrand switches from
    // ~0 to ~1 around the root of shift + log V. For large z that switch is a
    // narrow layer next to pi; splitting there keeps the quadrature from missing it.
    double lo = 0.0, hi = pi;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        (shift + log_v(mid) < 0.0 ? lo : hi) = mid;
    }
    const double split = 0.5 * (lo + hi);
    using quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    double error = 0.0;
    double area = 0.0;
    if (split > 0.0) area += quad::integrate(integrand, 0.0, split, 15, 1e-10, &error);
    if (split < pi) area += quad::integrate(integrand, split, pi, 15, 1e-10, &error);
    return std::clamp(area / pi, 0.0, 1.0);
}

CombinedResult harmonic_mean_p(std::span<const double> raw, HmpCalibration calibration) {
    validate(raw, "harmonic_mean_p");
    CombinedResult out;
    out.method = CombineMethod::hmp;
    out.winner = argmin(raw);
    if (raw[out.winner] == 0.0) {
        out.p_comb = 0.0;
        out.harmonic_mean = 0.0;
        return out;
    }
    double inv_sum = 0.0;
    for (double p : raw) inv_sum += 1.0 / p;
    const auto k = static_cast<double>(raw.size());
    out.harmonic_mean = k / inv_sum;
    if (calibration == HmpCalibration::direct) {
        out.p_comb = std::min(1.0, out.harmonic_mean);
    } else {
        // 1/HMP is asymptotically Landau with location ln k + 0.874 and scale pi/2.
        out.p_comb = landau_upper_tail(inv_sum / k, std::log(k) + 0.874, std::numbers::pi / 2.0);
    }
    return out;
}

CombinedResult cauchy_combination(std::span<const double> raw) {
    validate(raw, "cauchy_combination");
    CombinedResult out;
    out.method = CombineMethod::cct;
    out.winner = argmin(raw);
    constexpr double pi = std::numbers::pi;
    double total = 0.0;
    for (double p : raw) {
        const double clipped = std::clamp(p, 1e-15, 1.0 - 1e-15);
        // tan((0.5 - p) pi) = cot(p pi), which keeps precision for tiny p.
        total += clipped == 0.5 ? 0.0 : 1.0 / std::tan(clipped * pi);
    }
    const double t = total / static_cast<double>(raw.size());
    // 1/2 - atan(t)/pi, written to avoid cancellation for large t.
    const double p = t > 1.0 ? std::atan(1.0 / t) / pi : 0.5 - std::atan(t) / pi;
    out.p_comb = std::clamp(p, 0.0, 1.0);
    return out;
}

CombinedResult combine(CombineMethod method, std::span<const double> raw, HmpCalibration calibration) {
    switch (method) {
        case CombineMethod::bonf: return bonferroni(raw);
        case CombineMethod::bh: return benjamini_hochberg(raw);
        case CombineMethod::hmp: return harmonic_mean_p(raw, calibration);
        case CombineMethod::cct: return cauchy_combination(raw);
    }
    throw std::invalid_argument("combine: unknown method");
}

}  // namespace rpcp
