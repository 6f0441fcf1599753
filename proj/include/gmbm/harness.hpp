#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gmbm/calibrate.hpp"
#include "gmbm/eigensolver.hpp"
#include "gmbm/metrics.hpp"
#include "gmbm/model.hpp"
#include "gmbm/rng.hpp"
#include "gmbm/spectral.hpp"

namespace gmbm {

enum class Task : unsigned { embed = 1, cluster = 2, test = 4, residual = 8, crossing = 16, auc = 32 };

class TaskSet {
public:
    TaskSet() = default;
    TaskSet(std::initializer_list<Task> tasks) {
        for (auto t : tasks) insert(t);
    }
    void insert(Task t) { bits_ |= static_cast<unsigned>(t); }
    bool contains(Task t) const { return bits_ & static_cast<unsigned>(t); }
    bool empty() const { return bits_ == 0; }
    friend bool operator==(TaskSet, TaskSet) = default;

private:
    unsigned bits_ = 0;
};

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view name);
inline constexpr Task kAllTasks[] = {Task::embed, Task::cluster, Task::test, Task::residual, Task::crossing, Task::auc};

/// A mu value, either explicit or a multiple of one of the regime scalings:
///   d^x, (nd)^x, (npd)^x, (log n / d)^x, or mustar = max(d^-3/4, (npd)^-1/4).
struct MuSpec {
    enum class Base { constant, d, nd, npd, logn_over_d, mustar };
    Base base = Base::constant;
    double multiplier = 0.0;
    double exponent = 1.0;
    std::string text;

    double resolve(std::size_t n, int d, double p) const;
    static MuSpec parse(std::string_view text);
};

/// max(d^-3/4, (npd)^-1/4).
double mu_star(std::size_t n, int d, double p);

struct TrialOptions {
    TestPolicy policy;
    EigenOptions eigen;
    CutRule cut = CutRule::zero;
    /// Estimate d from the spectral gap instead of using the true d.
    bool detect_dimension = false;
    double gap_gamma = 8.0;
    ResidualOptions residual;
    std::size_t calibration_samples = kDefaultCalibrationSamples;
    /// Threshold for the mu = 0 graph drawn alongside each trial by the auc task.
    std::optional<double> null_tau;
};

struct TrialRecord {
    std::size_t cell = 0;
    std::size_t trial = 0;
    ModelParams params;
    std::uint64_t stream_key = 0;
    std::uint64_t edges = 0;
    std::optional<int> d_est;
    ErrorReport errors;
    std::optional<double> statistic;       // eta_1
    std::optional<double> threshold;
    std::optional<Decision> decision;
    std::optional<double> null_statistic;  // eta_1 of the paired mu = 0 graph
    std::optional<std::string> failure;
    double wall_time = 0.0;  // seconds; not persisted
};

/// Sample, connect, decompose and score one graph. Every randomized stage
/// draws from a named child of `stream`. Library errors are caught and
/// stored in `failure`.
TrialRecord run_trial(ModelParams params, TaskSet tasks, const RngStream& stream, const TrialOptions& options = {});

enum class OutputFormat { csv, jsonl };

struct SweepConfig {
    std::vector<std::size_t> n{2000};
    std::vector<int> d{64};
    std::vector<double> p{0.2};
    std::vector<MuSpec> mu{MuSpec{}};
    int trials = 1;
    std::uint64_t seed = 0;
    TaskSet tasks{Task::cluster};
    std::filesystem::path output;
    OutputFormat format = OutputFormat::csv;
    /// Test policy: empirical null threshold per (n, d, p) unless `policy` is paper.
    TestPolicyKind policy = TestPolicyKind::empirical_null;
    double alpha = 0.05;
    int null_trials = 200;
    double beta = 9.0;
    bool detect_dimension = false;
    std::size_t calibration_samples = kDefaultCalibrationSamples;

    /// Throws InvalidParameter on empty grids, trials < 1 or out-of-range values.
    void validate() const;
};

/// `key = value` lines, '#' comments, comma-separated lists. Keys: n, d, p,
/// mu, trials, seed, tasks, output, format, policy, alpha, null_trials, beta,
/// detect_dimension, calibration_samples.
SweepConfig parse_sweep_config(std::istream& in);
SweepConfig load_sweep_config(const std::filesystem::path& path);

struct SweepCell {
    std::size_t index = 0;
    std::size_t n = 0;
    int d = 0;
    double p = 0.0;
    MuSpec mu;
    double mu_value = 0.0;
    std::string key;
};

std::vector<SweepCell> expand_cells(const SweepConfig& config);

inline constexpr int kSchemaVersion = 1;

struct SweepSummary {
    std::size_t cells = 0;
    std::size_t trials_run = 0;
    std::size_t trials_resumed = 0;
    std::size_t failures = 0;
};

/// Runs every (cell, trial) and appends one row per trial plus one aggregate
/// row per cell to config.output. Rows already present (and consistent with
/// the config) are kept and not recomputed, so an interrupted sweep resumes
/// to the same file an uninterrupted one would produce.
SweepSummary sweep(const SweepConfig& config, const std::function<void(const TrialRecord&)>& progress = {});

struct TestErrors {
    double type1 = 0.0;
    double type2 = 0.0;
    double threshold = 0.0;
    double tau_null = 0.0;
    std::vector<double> null_statistics;
    std::vector<double> alt_statistics;
};

/// Calibrates an empirical-null threshold on `null_trials` mu = 0 graphs,
/// then measures rejection rates on fresh null (`eval_null_trials`, default
/// null_trials) and alternative (`alt_trials`) batches.
TestErrors estimate_test_errors(const ModelParams& params, double alpha, int null_trials, int alt_trials,
                                const RngStream& stream, std::optional<int> eval_null_trials = std::nullopt);

struct AucEstimate {
    double auc = 0.5;
    double se = 0.0;
    std::vector<double> null_statistics;
    std::vector<double> alt_statistics;
};

/// Mann-Whitney AUC of alt over null (ties count 1/2), with the Hanley-McNeil
/// standard error.
AucEstimate auc_from_samples(std::vector<double> null_statistics, std::vector<double> alt_statistics);

/// eta_1 on `trials` mu = 0 graphs and `trials` graphs at params.mu with the
/// same (n, d, p); throws InvalidParameter for trials < 50. Supplying
/// `null_statistics` reuses an earlier null batch.
AucEstimate detection_auc(const ModelParams& params, int trials, const RngStream& stream,
                          std::optional<std::vector<double>> null_statistics = std::nullopt);

/// eta_1 of `trials` graphs drawn at `params` (tau resolved) from stream.child(t).
std::vector<double> eta1_samples(const ModelParams& params, int trials, const RngStream& stream);

}  // namespace gmbm
