#pragma once

#include "termnav/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace termnav {

// ---------------------------------------------------------------- statistics

struct MeanCI {
    double mean = 0.0;
    double half_width = 0.0;  // 95% Student-t interval
    int n = 0;
};

MeanCI mean_ci(std::span<const double> xs);

struct PairedTest {
    double mean_difference = 0.0;
    double t = 0.0;
    int df = 0;
    double p_greater = 1.0;    // one-sided, H1: mean(a - b) > 0
    double p_two_sided = 1.0;
};

/// Paired t-test on a[i] - b[i]. Zero variance gives t = +-inf (or 0 when the
/// mean difference is also 0).
PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct RankCorrelation {
    double rho = 0.0;
    double p_two_sided = 1.0;
    double p_less = 1.0;  // one-sided, H1: rho < 0
    int n = 0;
};

/// Spearman rank correlation (average ranks for ties). Exact permutation
/// p-values for n <= 9, the t approximation above that.
RankCorrelation spearman(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------- sweeps

struct NamedAssessor {
    std::string name = "oracle";
    AssessorConfig config;
};

/// Component toggles applied on top of the base config. `assessment` off
/// runs the Naive policy whatever the policy axis says.
struct Variant {
    std::string name = "full";
    bool use_segmentation = true;
    bool use_region_estimation = true;
    bool assessment = true;
    bool reperception = true;
};

struct SweepSpec {
    std::vector<std::uint64_t> scenario_seeds{1};
    std::vector<Policy> policies{Policy::Rate};
    std::vector<double> thresholds{0.7};
    std::vector<NamedAssessor> assessors{NamedAssessor{}};
    std::vector<Variant> variants{Variant{}};
    int repetitions = 1;
    int workers = 1;
    bool write_traces = false;
    int marginal_window = 5;
    FloorplanParams floorplan;
    EpisodeConfig base;

    std::size_t total_runs() const;
};

/// Throws ConfigurationError on empty axes or non-positive counts.
void validate(const SweepSpec& spec);

/// Five rows over (segmentation, estimation, perception) toggles:
/// none, segmentation only, segmentation + estimation, segmentation +
/// perception, all three.
std::vector<Variant> ablation_variants();

struct CellKey {
    Policy policy = Policy::Rate;
    double threshold = 0.7;
    std::string assessor;
    std::string variant;

    std::string label() const;
    friend bool operator==(const CellKey&, const CellKey&) = default;
};

/// One finished (or failed) episode; the unit every aggregate folds over.
struct EpisodeRecord {
    CellKey cell;
    std::uint64_t seed = 0;
    int repetition = 0;
    std::optional<std::string> failure;
    bool success = false;
    double spl = 0.0;
    double soft_spl = 0.0;
    int steps = 0;
    double path_length = 0.0;
    double shortest_path = 0.0;
    int collisions = 0;
    std::string end_reason;
    int terminations = 0;
    std::optional<int> first_detection_step;
    std::optional<double> found_at_rate;
    std::vector<double> rate_series;  // agent's region rate after each step's update
};

std::string to_json_line(const EpisodeRecord& r);
EpisodeRecord episode_record_from_json(const std::string& line);

/// Builds the config of one run of the sweep.
EpisodeConfig cell_config(const SweepSpec& spec, const CellKey& key, const Variant& variant, int repetition);

/// Scenario of one sweep seed.
Scenario sweep_scenario(const SweepSpec& spec, std::uint64_t seed);

/// Runs one episode and folds it into a record; exceptions become failures.
EpisodeRecord run_cell_episode(const SweepSpec& spec, const Scenario& scenario, const CellKey& key,
                               const Variant& variant, int repetition, std::vector<StepRecord>* trace = nullptr);

struct MarginalSeries {
    int window = 5;
    std::vector<double> mean_rate;        // index s: mean rate after s steps, s = 0 is before the first view
    std::vector<double> window_marginal;  // per-step rate gain inside each window, over episodes still running
    RankCorrelation trend;                // window index vs window_marginal
};

/// Ten bins [k/10, (k+1)/10) over [0, 1) plus an eleventh bin holding
/// exactly 1.0, so "before full exploration" is the first ten bins.
struct Histogram {
    std::vector<int> counts = std::vector<int>(11, 0);
    void add(double rate);
    int total() const;
    /// Entries in bins below `k / 10`.
    int below_bin(int k) const;
};

struct MarginalReport {
    MarginalSeries series;
    Histogram found_at_rate;
};

/// (a) mean rate series and per-window marginals, padding finished episodes
/// with their final rate; (b) histogram of the rate at first detection.
MarginalReport marginal_analysis(std::span<const EpisodeRecord> records, int window = 5);

struct CellReport {
    CellKey key;
    int episodes = 0;
    int failures = 0;
    MeanCI success, spl, soft_spl, steps, collisions;
    MarginalReport marginal;
};

struct AggregateReport {
    std::vector<CellReport> cells;
    std::vector<EpisodeRecord> episodes;  // sorted by (cell order, seed, repetition)
};

/// Pure fold over episode records, grouped by cell in first-seen order.
AggregateReport aggregate(std::vector<EpisodeRecord> records, int window = 5);

/// Runs every cell over the worker pool, then writes episodes.jsonl,
/// aggregate.csv, series.csv, marginal.csv, histogram.csv (and traces/ when
/// enabled) to `out_dir`. Output is independent of the worker count. A
/// scenario that cannot be generated fails its episodes, not the sweep.
AggregateReport run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir);

void write_aggregate_csv(std::ostream& os, const AggregateReport& report);
void write_series_csv(std::ostream& os, const AggregateReport& report);
void write_marginal_csv(std::ostream& os, const AggregateReport& report);
void write_histogram_csv(std::ostream& os, const AggregateReport& report);
void write_report_files(const AggregateReport& report, const std::filesystem::path& out_dir);

std::vector<EpisodeRecord> read_episode_records(std::istream& is);

/// Values of `metric` ("spl", "soft_spl", "success", "steps") of the cell,
/// ordered by (seed, repetition); used for paired comparisons.
std::vector<double> cell_metric(const AggregateReport& report, const CellKey& key, const std::string& metric);

}  // namespace termnav
