// rpcp: random-projection change-point detection from the command line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rpcp/detector.hpp"
#include "rpcp/harness.hpp"
#include "rpcp/io.hpp"
#include "rpcp/null_cache.hpp"

namespace fs = std::filesystem;
using namespace rpcp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSignificant = 2;

struct DetectorFlags {
    std::size_t k = 200;
    std::string variant = "cusum";
    std::string variance = "split";
    std::string trim = "logn";
    std::string method = "bonf";
    std::string hmp_calibration = "direct";
    double alpha = 0.05;
    unsigned threads = 1;
    std::string cache_dir;
    std::size_t null_reps = 100000;
    std::size_t null_increments = 10000;
    std::uint64_t null_seed = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--k", k, "number of random projections")->check(CLI::PositiveNumber);
        cmd->add_option("--variant", variant, "CUSUM variant")->check(CLI::IsMember({"cusum", "weighted"}));
        cmd->add_option("--variance", variance, "variance estimator")->check(CLI::IsMember({"split", "hac"}));
        cmd->add_option("--trim", trim, "window trim: 1, n025, logn, sqrtn or an integer");
        cmd->add_option("--method", method, "p-value combination")
            ->check(CLI::IsMember({"bonf", "bh", "hmp", "cct"}));
        cmd->add_option("--hmp-calibration", hmp_calibration, "harmonic mean calibration")
            ->check(CLI::IsMember({"direct", "landau"}));
        cmd->add_option("--alpha", alpha, "significance level")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
        cmd->add_option("--cache-dir", cache_dir, "directory of simulated null laws (weighted variant)");
        cmd->add_option("--null-reps", null_reps, "replications of the weighted null law");
        cmd->add_option("--null-increments", null_increments, "grid steps of the weighted null law");
        cmd->add_option("--null-seed", null_seed, "seed of the weighted null law");
    }

    DetectorConfig config(std::uint64_t seed, std::size_t n) const {
        DetectorConfig cfg;
        cfg.k = k;
        cfg.variant = parse_variant(variant);
        cfg.variance = parse_variance(variance);
        cfg.trim = TrimSpec::parse(trim);
        cfg.method = parse_method(method);
        cfg.hmp_calibration = parse_hmp_calibration(hmp_calibration);
        cfg.alpha = alpha;
        cfg.seed = seed;
        cfg.threads = threads;
        cfg.validate();
        if (cfg.variant == CusumVariant::weighted) {
            NullKey key;
            key.variant = CusumVariant::weighted;
            key.trim_fraction = matching_trim_fraction(effective_trim(cfg.variant, cfg.trim, n), n);
            key.replications = null_reps;
            key.increments = null_increments;
            key.seed = null_seed;
            NullCache cache(cache_dir, threads);
            cfg.weighted_null = cache.get(key).null;
        }
        return cfg;
    }
};

struct InputFlags {
    std::string input;
    bool header = false;
    bool row_labels = false;
    std::string labels;

    void attach(CLI::App* cmd) {
        cmd->add_option("input", input, "CSV with one time point per row")->required();
        cmd->add_flag("--header", header, "first record is a header");
        cmd->add_flag("--row-labels", row_labels, "first column holds row labels (e.g. years)");
        cmd->add_option("--labels", labels, "time-point labels: FIRST..LAST or a comma list");
    }

    NumericTable load() const {
        std::ifstream in(input, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + input);
        return read_numeric_csv(in, header, row_labels);
    }

    std::vector<std::string> label_list(const NumericTable& t) const {
        if (!labels.empty()) return parse_labels(labels);
        return t.row_labels;
    }
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

int run_detect(const InputFlags& io, const DetectorFlags& det, std::uint64_t seed, const std::string& per_proj) {
    const NumericTable table = io.load();
    DetectorConfig cfg = det.config(seed, table.data.n());
    cfg.keep_per_projection = !per_proj.empty();
    const DetectionReport report = detect(table.data, cfg);
    const auto labels = io.label_list(table);
    std::optional<std::string> label;
    if (!labels.empty()) label = label_for(labels, report.z_hat);
    write_report(std::cout, report, cfg, label);
    if (!per_proj.empty()) {
        auto out = open_out(per_proj);
        write_per_projection(out, report);
    }
    return report.significant ? kExitSignificant : kExitOk;
}

int run_repeat(const InputFlags& io, const DetectorFlags& det, std::uint64_t seed, std::size_t reps,
               const std::string& histogram) {
    const NumericTable table = io.load();
    DetectorConfig cfg = det.config(seed, table.data.n());
    const unsigned threads = cfg.threads;
    cfg.threads = 1;
    const RepetitionSummary s = detect_repeated(table.data, cfg, reps, threads);
    const auto labels = io.label_list(table);
    fmt::print("repetitions: {}\n", reps);
    fmt::print("mode: {}\n", s.mode);
    fmt::print("mode_count: {}\n", s.mode_count);
    if (!labels.empty()) fmt::print("mode_label: {}\n", label_for(labels, s.mode));
    fmt::print("significant_count: {}\n", s.significant_count());
    if (const auto sm = s.significant_mode()) {
        fmt::print("significant_mode: {}\n", *sm);
    } else {
        fmt::print("significant_mode: NA\n");
    }
    if (histogram.empty() || histogram == "-") {
        std::cout << '\n';
        write_histogram(std::cout, s, labels);
    } else {
        auto out = open_out(histogram);
        write_histogram(out, s, labels);
    }
    return kExitOk;
}

int run_reshape(const std::string& input, const std::string& output, bool interpolate) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + input);
    const ReshapeResult r = reshape_yearly(read_daily_csv(in), interpolate);
    for (const auto& w : r.warnings) fmt::print(std::cerr, "warning: {}\n", w);
    if (r.matrix.year_labels.empty()) throw std::runtime_error("no complete years in " + input);
    if (output.empty() || output == "-") {
        write_yearly(std::cout, r.matrix);
    } else {
        auto out = open_out(output);
        write_yearly(out, r.matrix);
    }
    fmt::print(std::cerr, "{} years, {} to {}\n", r.matrix.year_labels.size(), r.matrix.year_labels.front(),
               r.matrix.year_labels.back());
    return kExitOk;
}

int run_simulate(const std::string& spec_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
                 std::optional<unsigned> threads) {
    ExperimentSpec spec = load_experiment_spec(spec_path);
    if (seed) spec.seed = *seed;
    if (threads) spec.threads = *threads;
    const fs::path dir(out_dir);
    std::vector<std::string> outputs;

    const bool table_metrics = std::any_of(spec.metrics.begin(), spec.metrics.end(),
                                           [](Metric m) { return m != Metric::repetition; });
    if (table_metrics) {
        const ResultTable table = run_experiment(spec);
        const std::string name = spec.name + ".csv";
        auto out = open_out(dir / name);
        write_result_csv(out, table);
        outputs.push_back(name);
    }
    if (spec.metrics.count(Metric::repetition)) {
        const auto entries = run_repetition_study(spec, spec.repetition_datasets, spec.repetitions);
        const std::string hist = spec.name + "_repetition_histogram.csv";
        const std::string modes = spec.name + "_repetition_modes.csv";
        auto h = open_out(dir / hist);
        write_repetition_histograms(h, entries);
        auto m = open_out(dir / modes);
        write_repetition_modes(m, entries);
        outputs.push_back(hist);
        outputs.push_back(modes);
    }
    auto sidecar = open_out(dir / (spec.name + ".json"));
    sidecar << experiment_sidecar_json(spec, outputs);
    for (const auto& o : outputs) fmt::print("wrote {}\n", (dir / o).string());
    return kExitOk;
}

int run_nulldist(const std::string& variant, double trim_fraction, std::size_t reps, std::size_t increments,
                 std::uint64_t seed, const std::string& cache_dir, bool force, unsigned threads) {
    NullKey key;
    key.variant = parse_variant(variant);
    key.trim_fraction = trim_fraction;
    key.replications = reps;
    key.increments = increments;
    key.seed = seed;
    if (key.variant == CusumVariant::weighted && !(trim_fraction > 0.0)) {
        throw std::invalid_argument("weighted null needs a positive --trim-fraction");
    }
    NullCache cache(cache_dir, threads);
    const auto lookup = cache.get(key, force);
    fmt::print("{}: {}\n", lookup.cache_hit ? "cache hit" : "simulated", lookup.file.string());
    for (double q : {0.90, 0.95, 0.99}) fmt::print("q{:.2f}: {:.6f}\n", q, lookup.null->quantile(q));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-projection change-point detection for high-dimensional series"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", RPCP_VERSION);

    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "master seed");
    unsigned threads_override = 0;

    InputFlags io;
    DetectorFlags det;

    auto* detect_cmd = app.add_subcommand("detect", "test a CSV for a single mean change");
    std::string per_proj;
    io.attach(detect_cmd);
    det.attach(detect_cmd);
    detect_cmd->add_option("--per-projection", per_proj, "write the per-projection table to this CSV");

    auto* repeat_cmd = app.add_subcommand("repeat", "repeat detection with fresh projections and report the mode");
    std::size_t reps = 1000;
    std::string histogram;
    InputFlags rio;
    DetectorFlags rdet;
    rio.attach(repeat_cmd);
    rdet.attach(repeat_cmd);
    repeat_cmd->add_option("--reps", reps, "repetitions")->check(CLI::PositiveNumber);
    repeat_cmd->add_option("--histogram", histogram, "histogram CSV path (default: stdout)");

    auto* reshape_cmd = app.add_subcommand("reshape-yearly", "turn a daily date,value CSV into a years x 365 matrix");
    std::string daily_in, yearly_out;
    bool interpolate = false;
    reshape_cmd->add_option("input", daily_in, "daily CSV")->required();
    reshape_cmd->add_option("-o,--output", yearly_out, "output CSV (default: stdout)");
    reshape_cmd->add_flag("--interpolate", interpolate, "fill missing days by linear interpolation");

    auto* simulate_cmd = app.add_subcommand("simulate", "run a Monte Carlo experiment spec");
    std::string spec_path, out_dir = ".";
    simulate_cmd->add_option("spec", spec_path, "YAML experiment spec")->required()->check(CLI::ExistingFile);
    simulate_cmd->add_option("-o,--output-dir", out_dir, "directory for result files");
    auto* sim_threads = simulate_cmd->add_option("--threads", threads_override, "worker threads (0 = all cores)");

    auto* null_cmd = app.add_subcommand("nulldist", "simulate and cache a CUSUM null distribution");
    std::string null_variant = "cusum", cache_dir = ".rpcp-cache";
    double trim_fraction = 0.0;
    std::size_t null_reps = 100000, increments = 10000;
    bool force = false;
    unsigned null_threads = 0;
    null_cmd->add_option("--variant", null_variant, "CUSUM variant")->check(CLI::IsMember({"cusum", "weighted"}));
    null_cmd->add_option("--trim-fraction", trim_fraction, "trim fraction l/n")->check(CLI::Range(0.0, 0.5));
    null_cmd->add_option("--reps", null_reps, "replications");
    null_cmd->add_option("--increments", increments, "grid steps per path");
    null_cmd->add_option("--cache-dir", cache_dir, "cache directory");
    null_cmd->add_flag("--force", force, "recompute even when cached");
    null_cmd->add_option("--threads", null_threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*detect_cmd) return run_detect(io, det, seed, per_proj);
        if (*repeat_cmd) return run_repeat(rio, rdet, seed, reps, histogram);
        if (*reshape_cmd) return run_reshape(daily_in, yearly_out, interpolate);
        if (*simulate_cmd) {
            return run_simulate(spec_path, out_dir, *seed_opt ? std::optional(seed) : std::nullopt,
                                *sim_threads ? std::optional(threads_override) : std::nullopt);
        }
        if (*null_cmd) {
            const std::uint64_t null_seed = *seed_opt ? seed : 1;
            return run_nulldist(null_variant, trim_fraction, null_reps, increments, null_seed, cache_dir, force,
                                null_threads);
        }
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kExitError;
    }
    return kExitError;
}
