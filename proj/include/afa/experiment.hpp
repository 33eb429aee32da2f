#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "afa/afa_model.hpp"
#include "afa/fscil.hpp"
#include "afa/optim.hpp"

namespace afa {

enum class DataSource { Synthetic, File };

/// Recognized strategy names: arithmetic, geometric, harmonic, power,
/// majority, shallow_nn, deep_nn, weighted_avg_nn, afa, base_only.
bool is_known_strategy(const std::string& name);

/// Flat `section.key=value` configuration. Blank lines and lines starting
/// with '#' are ignored; unknown or repeated keys are errors.
struct ExperimentConfig {
    SessionSpec session{20, 4, 5, 5, kDefaultThreshold};
    DataSource source = DataSource::Synthetic;
    SyntheticSpec synthetic;  // n_class and seed are derived per run
    std::filesystem::path feature_file;
    std::vector<std::string> strategies = {"arithmetic", "geometric", "harmonic", "majority", "afa",
                                           "base_only"};
    double fusion_epsilon = kDefaultEpsilon;  // geometric/harmonic mean fusion smoothing
    double fusion_power_q = kDefaultPowerQ;
    std::vector<MeanKind> afa_branches = {MeanKind::arithmetic(), MeanKind::geometric(),
                                          MeanKind::harmonic()};
    Activation afa_activation = Activation::Softmax;
    TrainConfig train;
    double tau = kDefaultTau;
    bool fit_temperature = true;
    TemperatureGrid tau_grid;
    std::vector<std::uint64_t> seeds = {0};
    std::filesystem::path output_dir = "results";
    bool parallel = false;

    static ExperimentConfig parse(std::istream& in, const std::string& source_name = "<config>");
    static ExperimentConfig from_file(const std::filesystem::path& path);

    /// Throws ConfigError when an invariant does not hold.
    void validate() const;

    /// Every key with its resolved value; parse(to_text()) reproduces *this.
    std::string to_text() const;
};

struct ReportRow {
    std::string strategy;
    std::uint64_t seed = 0;
    std::size_t session = 0;
    std::size_t n_classes = 0;
    double f1_macro = 0.0;
    double acc_mean = 0.0;
    std::optional<double> acc_base;
    std::optional<double> acc_new;
};

struct SeedOutcome {
    std::vector<ReportRow> rows;
    std::optional<AfaNetwork> final_afa;  // last-session AFA model, if trained
};

/// Runs sessions 1..K for one seed. Rows are ordered by session, then by
/// the configured strategy order.
SeedOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed);

/// Every seed (in parallel when config.parallel is set; results are merged
/// in seed order, identical to a sequential run).
std::vector<SeedOutcome> run_all_seeds(const ExperimentConfig& config);

/// CSV line formatting of a real with 6 significant digits.
std::string format_metric(double value);

/// Writes results.csv and summary.csv into `dir`.
void emit_results(const std::vector<ReportRow>& rows, const std::filesystem::path& dir);

/// Full experiment: runs every seed, writes results.csv, summary.csv,
/// config.effective and the final AFA model per seed into the output dir.
std::vector<ReportRow> run_experiment(const ExperimentConfig& config);

}  // namespace afa
