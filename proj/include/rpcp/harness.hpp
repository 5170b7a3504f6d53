#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rpcp/combine.hpp"
#include "rpcp/cusum.hpp"
#include "rpcp/detector.hpp"
#include "rpcp/simgen.hpp"

namespace rpcp {

enum class Metric { size, power, adj_power, rmse, rmse_sig, repetition };

std::string_view to_string(Metric m) noexcept;
Metric parse_metric(std::string_view text);

struct NullSettings {
    std::size_t replications = 100000;
    std::size_t increments = 10000;
    std::uint64_t seed = 1;
    std::string cache_dir;  // empty: in-memory only
};

/// A Monte Carlo study over the cartesian grid
/// settings x m x theta x snr x k x variant x method.
struct ExperimentSpec {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    std::size_t replications = 1000;
    /// Template for n, grid_p, n_basis and noise_scale; setting, m, snr,
    /// theta and seed are overridden per cell.
    GeneratorConfig generator;
    std::vector<NoiseSetting> settings{NoiseSetting::s1};
    std::vector<std::size_t> m_grid{5};
    std::vector<double> theta_grid{0.25};
    std::vector<double> snr_grid{0.0};
    std::vector<std::size_t> k_grid{200};
    std::vector<CusumVariant> variants{CusumVariant::standard};
    VarianceKind variance = VarianceKind::split;
    TrimSpec trim = TrimSpec{TrimSpec::Rule::log_n, 1};
    std::vector<CombineMethod> methods{CombineMethod::bonf};
    HmpCalibration hmp_calibration = HmpCalibration::direct;
    double alpha = 0.05;
    NullSettings null;
    std::set<Metric> metrics{Metric::size, Metric::power};
    std::size_t repetition_datasets = 1;
    std::size_t repetitions = 1000;
    unsigned threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

struct CellKey {
    NoiseSetting setting = NoiseSetting::s1;
    std::size_t m = 5;
    double theta = 0.25;
    double snr = 0.0;
    std::size_t k = 200;
    CombineMethod method = CombineMethod::bonf;
    CusumVariant variant = CusumVariant::standard;

    bool operator==(const CellKey&) const = default;
};

struct ResultRow {
    CellKey key;
    std::size_t replications = 0;
    double rejection_rate = 0.0;
    double mc_stderr = 0.0;  // sqrt(r (1 - r) / replications)
    std::size_t significant_count = 0;
    std::optional<double> adj_threshold;
    std::optional<double> adj_rejection_rate;
    std::optional<double> rmse_all;  // theta units
    std::optional<double> rmse_stderr;
    std::optional<double> rmse_significant;
};

struct ResultTable {
    std::vector<ResultRow> rows;

    /// Throws std::out_of_range if absent.
    const ResultRow& at(const CellKey& key) const;
};

/// One replication's detector outcome.
struct Outcome {
    double p_comb = 1.0;
    std::size_t z_hat = 0;
    bool significant = false;
};

/// Raw outcomes of every cell, replications in order.
struct CellOutcomes {
    CellKey key;
    std::size_t true_z = 0;
    std::size_t n = 0;
    std::vector<Outcome> outcomes;
};

/// Runs every grid cell. Deterministic in spec.seed regardless of thread count.
std::vector<CellOutcomes> simulate_cells(const ExperimentSpec& spec);

/// Rejection rates (size when snr = 0, power otherwise).
ResultTable run_size_power(const ExperimentSpec& spec);
/// Adds size-adjusted rates; every (setting, m, theta, k, method, variant)
/// needs an snr = 0 cell, otherwise std::invalid_argument.
ResultTable run_size_adjusted_power(const ExperimentSpec& spec);
/// RMSE of theta_hat for snr > 0 cells.
ResultTable run_rmse(const ExperimentSpec& spec);
/// Every metric requested in spec.metrics except repetition.
ResultTable run_experiment(const ExperimentSpec& spec);

/// Metric assembly from precomputed outcomes.
ResultTable tabulate(const std::vector<CellOutcomes>& cells, double alpha, bool adjusted, bool rmse);

/// Threshold between the ceil(alpha N)-th and next order statistic of the null p_comb sample.
double adjusted_threshold(std::vector<double> null_pcomb, double alpha);
/// sqrt(mean((z_hat/n - true_z/n)^2)) over the selected outcomes; empty if none selected.
std::optional<double> location_rmse(const std::vector<Outcome>& outcomes, std::size_t true_z, std::size_t n,
                                    bool significant_only);

struct RepetitionStudyEntry {
    CellKey key;
    std::size_t dataset = 0;
    std::size_t true_z = 0;
    RepetitionSummary summary;
};

/// Fixes `dataset_count` datasets per (setting, m, theta, snr) and repeats
/// the detector `repetitions` times on each.
std::vector<RepetitionStudyEntry> run_repetition_study(const ExperimentSpec& spec, std::size_t dataset_count,
                                                       std::size_t repetitions);

/// Fixed column order; absent values are written as NA.
void write_result_csv(std::ostream& out, const ResultTable& table);
/// setting,m,theta,snr,k,method,variant,dataset,true_z,location,count
void write_repetition_histograms(std::ostream& out, const std::vector<RepetitionStudyEntry>& entries);
/// One line per entry with mode, mode_count, significant_count, significant_mode.
void write_repetition_modes(std::ostream& out, const std::vector<RepetitionStudyEntry>& entries);

/// Strict YAML loader: unknown keys are fatal and all of them are listed.
ExperimentSpec parse_experiment_spec(const std::string& yaml_text);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
/// JSON echo of the spec plus master seed and code version.
std::string experiment_sidecar_json(const ExperimentSpec& spec, const std::vector<std::string>& outputs);

}  // namespace rpcp
