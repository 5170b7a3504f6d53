#include "rpcp/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rpcp/null_cache.hpp"
#include "rpcp/parallel.hpp"
#include "rpcp/projection.hpp"
#include "rpcp/rng.hpp"

namespace rpcp {

namespace {

constexpr std::uint64_t kDataTag = 0x6461746100000000ULL;
constexpr std::uint64_t kDirectionTag = 0x6469720000000000ULL;
constexpr std::uint64_t kRepDataTag = 0x7264617461000000ULL;
constexpr std::uint64_t kRepDetectTag = 0x7264657400000000ULL;

struct DataCell {
    NoiseSetting setting;
    std::size_t m;
    double theta;
    double snr;
};

std::vector<DataCell> data_cells(const ExperimentSpec& spec) {
    std::vector<DataCell> cells;
    for (NoiseSetting s : spec.settings)
        for (std::size_t m : spec.m_grid)
            for (double theta : spec.theta_grid)
                for (double snr : spec.snr_grid) cells.push_back({s, m, theta, snr});
    return cells;
}

std::uint64_t cell_seed(std::uint64_t master, std::uint64_t tag, const DataCell& c, std::uint64_t a,
                        std::uint64_t b = 0) {
    return derive_seed(master, {tag, static_cast<std::uint64_t>(c.setting), c.m, std::bit_cast<std::uint64_t>(c.theta),
                                std::bit_cast<std::uint64_t>(c.snr), a, b});
}

GeneratorConfig cell_generator(const ExperimentSpec& spec, const DataCell& c, std::uint64_t seed) {
    GeneratorConfig g = spec.generator;
    g.setting = c.setting;
    g.m = c.m;
    g.theta = c.theta;
    g.snr = c.snr;
    g.seed = seed;
    return g;
}

DetectorConfig base_detector(const ExperimentSpec& spec) {
    DetectorConfig cfg;
    cfg.variance = spec.variance;
    cfg.trim = spec.trim;
    cfg.hmp_calibration = spec.hmp_calibration;
    cfg.alpha = spec.alpha;
    cfg.threads = 1;  // parallelism lives at the replication level
    return cfg;
}

std::shared_ptr<const NullDistribution> weighted_null_for(const ExperimentSpec& spec) {
    if (std::find(spec.variants.begin(), spec.variants.end(), CusumVariant::weighted) == spec.variants.end()) {
        return nullptr;
    }
    const std::size_t n = spec.generator.n;
    NullKey key;
    key.variant = CusumVariant::weighted;
    key.trim_fraction = matching_trim_fraction(effective_trim(CusumVariant::weighted, spec.trim, n), n);
    key.replications = spec.null.replications;
    key.increments = spec.null.increments;
    key.seed = spec.null.seed;
    NullCache cache(spec.null.cache_dir, spec.threads);
    return cache.get(key).null;
}

bool is_null_match(const CellKey& a, const CellKey& b) {
    return a.snr == 0.0 && a.setting == b.setting && a.m == b.m && a.theta == b.theta && a.k == b.k &&
           a.method == b.method && a.variant == b.variant;
}

std::string cell_prefix(const CellKey& k) {
    return fmt::format("{},{},{},{},{},{},{}", to_string(k.setting), k.m, k.theta, k.snr, k.k, to_string(k.method),
                       to_string(k.variant));
}

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string("NA"); }

}  // namespace

std::string_view to_string(Metric m) noexcept {
    switch (m) {
        case Metric::size: return "size";
        case Metric::power: return "power";
        case Metric::adj_power: return "adj_power";
        case Metric::rmse: return "rmse";
        case Metric::rmse_sig: return "rmse_sig";
        case Metric::repetition: return "repetition";
    }
    return "?";
}

Metric parse_metric(std::string_view text) {
    for (Metric m : {Metric::size, Metric::power, Metric::adj_power, Metric::rmse, Metric::rmse_sig,
                     Metric::repetition}) {
        if (text == to_string(m)) return m;
    }
    throw std::invalid_argument("unknown metric '" + std::string(text) + "'");
}

void ExperimentSpec::validate() const {
    if (replications < 1) throw std::invalid_argument("experiment: replications must be at least 1");
    if (snr_grid.empty()) throw std::invalid_argument("experiment: snr_grid is empty");
    if (settings.empty() || m_grid.empty() || theta_grid.empty() || k_grid.empty() || variants.empty() ||
        methods.empty()) {
        throw std::invalid_argument("experiment: every grid needs at least one value");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("experiment: alpha must lie in (0, 1]");
    for (std::size_t k : k_grid) {
        if (k == 0) throw std::invalid_argument("experiment: k must be at least 1");
    }
    for (const auto& c : data_cells(*this)) cell_generator(*this, c, 0).validate();
    for (CusumVariant v : variants) {
        const std::size_t l = effective_trim(v, trim, generator.n);
        if (generator.n < 2 * l + 2) throw std::invalid_argument("experiment: n too short for the trim");
    }
    if (metrics.count(Metric::repetition) && repetitions < 1) {
        throw std::invalid_argument("experiment: repetition study needs at least one repetition");
    }
}

const ResultRow& ResultTable::at(const CellKey& key) const {
    for (const auto& r : rows) {
        if (r.key == key) return r;
    }
    throw std::out_of_range("result table has no row " + cell_prefix(key));
}

std::vector<CellOutcomes> simulate_cells(const ExperimentSpec& spec) {
    spec.validate();
    const auto cells = data_cells(spec);
    const auto null = weighted_null_for(spec);
    const DetectorConfig base = base_detector(spec);
    const std::size_t per_data = spec.k_grid.size() * spec.variants.size() * spec.methods.size();

    std::vector<CellOutcomes> out;
    out.reserve(cells.size() * per_data);
    for (const auto& c : cells) {
        const std::size_t first = out.size();
        const std::size_t true_z = static_cast<std::size_t>(std::floor(c.theta * static_cast<double>(spec.generator.n)));
        for (std::size_t k : spec.k_grid)
            for (CusumVariant v : spec.variants)
                for (CombineMethod meth : spec.methods) {
                    CellOutcomes co;
                    co.key = CellKey{c.setting, c.m, c.theta, c.snr, k, meth, v};
                    co.true_z = true_z;
                    co.n = spec.generator.n;
                    co.outcomes.resize(spec.replications);
                    out.push_back(std::move(co));
                }

        parallel_for(spec.replications, spec.threads, [&](std::size_t rep) {
            const GeneratedData gen = generate(cell_generator(spec, c, cell_seed(spec.seed, kDataTag, c, rep)));
            std::size_t slot = first;
            for (std::size_t k : spec.k_grid) {
                const ProjectionMatrix d =
                    generate_directions(gen.data.p(), k, cell_seed(spec.seed, kDirectionTag, c, k, rep));
                for (CusumVariant v : spec.variants) {
                    DetectorConfig cfg = base;
                    cfg.k = k;
                    cfg.variant = v;
                    cfg.weighted_null = null;
                    const ProjectionTests tests = run_projection_tests(gen.data, d, cfg);
                    for (CombineMethod meth : spec.methods) {
                        const DetectionReport r = finalize(tests, meth, spec.alpha, false, spec.hmp_calibration);
                        out[slot++].outcomes[rep] = Outcome{r.p_comb, r.z_hat, r.significant};
                    }
                }
            }
        });
    }
    return out;
}

double adjusted_threshold(std::vector<double> null_pcomb, double alpha) {
    if (null_pcomb.empty()) throw std::invalid_argument("adjusted_threshold: empty null sample");
    std::sort(null_pcomb.begin(), null_pcomb.end());
    const std::size_t n = null_pcomb.size();
    const auto j = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
    if (j == 0) return null_pcomb.front();
    if (j >= n) return std::nextafter(null_pcomb.back(), std::numeric_limits<double>::infinity());
    // Strictly below the midpoint of order statistics j and j+1 selects exactly j null runs.
    return 0.5 * (null_pcomb[j - 1] + null_pcomb[j]);
}

std::optional<double> location_rmse(const std::vector<Outcome>& outcomes, std::size_t true_z, std::size_t n,
                                    bool significant_only) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& o : outcomes) {
        if (significant_only && !o.significant) continue;
        const double e = (static_cast<double>(o.z_hat) - static_cast<double>(true_z)) / static_cast<double>(n);
        sum += e * e;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return std::sqrt(sum / static_cast<double>(count));
}

namespace {

// Delta-method standard error of sqrt(mean(e^2)).
double rmse_stderr(const std::vector<Outcome>& outcomes, std::size_t true_z, std::size_t n, double rmse) {
    const std::size_t count = outcomes.size();
    if (count < 2 || rmse <= 0.0) return 0.0;
    const double mean = rmse * rmse;
    double ss = 0.0;
    for (const auto& o : outcomes) {
        const double e = (static_cast<double>(o.z_hat) - static_cast<double>(true_z)) / static_cast<double>(n);
        ss += (e * e - mean) * (e * e - mean);
    }
    const double var_mean = ss / static_cast<double>(count - 1) / static_cast<double>(count);
    return std::sqrt(var_mean) / (2.0 * rmse);
}

}  // namespace

ResultTable tabulate(const std::vector<CellOutcomes>& cells, double alpha, bool adjusted, bool rmse) {
    ResultTable table;
    table.rows.reserve(cells.size());
    for (const auto& cell : cells) {
        ResultRow row;
        row.key = cell.key;
        row.replications = cell.outcomes.size();
        for (const auto& o : cell.outcomes) row.significant_count += o.significant ? 1 : 0;
        const double reps = static_cast<double>(row.replications);
        row.rejection_rate = static_cast<double>(row.significant_count) / reps;
        row.mc_stderr = std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / reps);

        if (adjusted) {
            auto null_it = std::find_if(cells.begin(), cells.end(),
                                        [&](const CellOutcomes& o) { return is_null_match(o.key, cell.key); });
            if (null_it == cells.end()) {
                throw std::invalid_argument("size-adjusted power needs an snr = 0 cell for " + cell_prefix(cell.key));
            }
            std::vector<double> null_p;
            null_p.reserve(null_it->outcomes.size());
            for (const auto& o : null_it->outcomes) null_p.push_back(o.p_comb);
            const double t = adjusted_threshold(std::move(null_p), alpha);
            std::size_t hits = 0;
            for (const auto& o : cell.outcomes) hits += o.p_comb < t ? 1 : 0;
            row.adj_threshold = t;
            row.adj_rejection_rate = static_cast<double>(hits) / reps;
        }

        if (rmse && cell.key.snr > 0.0) {
            row.rmse_all = location_rmse(cell.outcomes, cell.true_z, cell.n, false);
            row.rmse_stderr = rmse_stderr(cell.outcomes, cell.true_z, cell.n, *row.rmse_all);
            row.rmse_significant = location_rmse(cell.outcomes, cell.true_z, cell.n, true);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

ResultTable run_size_power(const ExperimentSpec& spec) { return tabulate(simulate_cells(spec), spec.alpha, false, false); }

ResultTable run_size_adjusted_power(const ExperimentSpec& spec) {
    if (std::find(spec.snr_grid.begin(), spec.snr_grid.end(), 0.0) == spec.snr_grid.end()) {
        throw std::invalid_argument("size-adjusted power needs snr = 0 in snr_grid");
    }
    return tabulate(simulate_cells(spec), spec.alpha, true, false);
}

ResultTable run_rmse(const ExperimentSpec& spec) {
    if (std::none_of(spec.snr_grid.begin(), spec.snr_grid.end(), [](double s) { return s > 0.0; })) {
        throw std::invalid_argument("rmse needs at least one snr > 0");
    }
    return tabulate(simulate_cells(spec), spec.alpha, false, true);
}

ResultTable run_experiment(const ExperimentSpec& spec) {
    const bool adjusted = spec.metrics.count(Metric::adj_power) > 0;
    const bool rmse = spec.metrics.count(Metric::rmse) > 0 || spec.metrics.count(Metric::rmse_sig) > 0;
    if (adjusted && std::find(spec.snr_grid.begin(), spec.snr_grid.end(), 0.0) == spec.snr_grid.end()) {
        throw std::invalid_argument("size-adjusted power needs snr = 0 in snr_grid");
    }
    return tabulate(simulate_cells(spec), spec.alpha, adjusted, rmse);
}

std::vector<RepetitionStudyEntry> run_repetition_study(const ExperimentSpec& spec, std::size_t dataset_count,
                                                       std::size_t repetitions) {
    spec.validate();
    if (dataset_count == 0) throw std::invalid_argument("repetition study: need at least one dataset");
    if (repetitions == 0) throw std::invalid_argument("repetition study: need at least one repetition");
    const auto null = weighted_null_for(spec);
    const DetectorConfig base = base_detector(spec);
    const std::size_t nm = spec.methods.size();

    std::vector<RepetitionStudyEntry> entries;
    for (const auto& c : data_cells(spec)) {
        for (std::size_t d = 0; d < dataset_count; ++d) {
            const GeneratedData gen = generate(cell_generator(spec, c, cell_seed(spec.seed, kRepDataTag, c, d)));
            for (std::size_t k : spec.k_grid) {
                const std::uint64_t det_seed = cell_seed(spec.seed, kRepDetectTag, c, d, k);
                for (CusumVariant v : spec.variants) {
                    DetectorConfig cfg = base;
                    cfg.k = k;
                    cfg.variant = v;
                    cfg.weighted_null = null;
                    std::vector<std::size_t> loc(repetitions * nm);
                    std::vector<char> sig(repetitions * nm);
                    // Same direction stream as detect_repeated(data, cfg with seed det_seed, R).
                    parallel_for(repetitions, spec.threads, [&](std::size_t i) {
                        const ProjectionMatrix dirs =
                            generate_directions(gen.data.p(), k, repetition_seed(det_seed, i));
                        const ProjectionTests tests = run_projection_tests(gen.data, dirs, cfg);
                        for (std::size_t j = 0; j < nm; ++j) {
                            const DetectionReport r =
                                finalize(tests, spec.methods[j], spec.alpha, false, spec.hmp_calibration);
                            loc[j * repetitions + i] = r.z_hat;
                            sig[j * repetitions + i] = r.significant ? 1 : 0;
                        }
                    });
                    for (std::size_t j = 0; j < nm; ++j) {
                        const auto lb = loc.begin() + static_cast<std::ptrdiff_t>(j * repetitions);
                        const auto sb = sig.begin() + static_cast<std::ptrdiff_t>(j * repetitions);
                        RepetitionStudyEntry e;
                        e.key = CellKey{c.setting, c.m, c.theta, c.snr, k, spec.methods[j], v};
                        e.dataset = d;
                        e.true_z = gen.true_z;
                        e.summary = summarize_locations(
                            std::vector<std::size_t>(lb, lb + static_cast<std::ptrdiff_t>(repetitions)),
                            std::vector<bool>(sb, sb + static_cast<std::ptrdiff_t>(repetitions)));
                        entries.push_back(std::move(e));
                    }
                }
            }
        }
    }
    return entries;
}

void write_result_csv(std::ostream& out, const ResultTable& table) {
    out << "setting,m,theta,snr,k,method,variant,replications,rejection_rate,mc_stderr,significant_count,"
           "adj_threshold,adj_rejection_rate,rmse_all,rmse_stderr,rmse_significant\n";
    for (const auto& r : table.rows) {
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{}\n", cell_prefix(r.key), r.replications, r.rejection_rate,
                   r.mc_stderr, r.significant_count, opt(r.adj_threshold), opt(r.adj_rejection_rate), opt(r.rmse_all),
                   opt(r.rmse_stderr), opt(r.rmse_significant));
    }
}

void write_repetition_histograms(std::ostream& out, const std::vector<RepetitionStudyEntry>& entries) {
    out << "setting,m,theta,snr,k,method,variant,dataset,true_z,location,count\n";
    for (const auto& e : entries) {
        for (const auto& [loc, count] : e.summary.histogram) {
            fmt::print(out, "{},{},{},{},{}\n", cell_prefix(e.key), e.dataset, e.true_z, loc, count);
        }
    }
}

void write_repetition_modes(std::ostream& out, const std::vector<RepetitionStudyEntry>& entries) {
    out << "setting,m,theta,snr,k,method,variant,dataset,true_z,repetitions,mode,mode_count,significant_count,"
           "significant_mode\n";
    for (const auto& e : entries) {
        const auto sm = e.summary.significant_mode();
        fmt::print(out, "{},{},{},{},{},{},{},{}\n", cell_prefix(e.key), e.dataset, e.true_z,
                   e.summary.locations.size(), e.summary.mode, e.summary.mode_count, e.summary.significant_count(),
                   sm ? std::to_string(*sm) : std::string("NA"));
    }
}

}  // namespace rpcp
