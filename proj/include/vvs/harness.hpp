#pragma once

// Experiment runner: flat key-value experiment specs, Cartesian sweeps run
// in parallel with CSV emitted in a fixed order, and the analysis
// measurements (path similarity, feature similarity, staleness, blending,
// quality/throughput frontier, verified-result replacement).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vvs/config.hpp"
#include "vvs/engine.hpp"

namespace vvs {

// Sets one named EngineConfig field from text. RejectedInput names unknown
// keys and unparsable values.
void set_config_param(EngineConfig& config, const std::string& key, const std::string& value);
bool is_config_param(const std::string& key);
std::vector<std::string> config_param_names();
EngineConfig parse_config(std::istream& in);
EngineConfig load_config(const std::string& path);

struct SweepAxis {
  std::string param;
  std::vector<std::string> values;
};

struct ExperimentSpec {
  std::string name = "experiment";
  // grid | staleness | blending | pareto | replace | similarity | features | cache
  std::string experiment = "grid";
  std::string pipeline = "vvs";  // grid only: vanilla | sd | vvs
  EngineConfig base;
  std::vector<SweepAxis> axes;
  std::size_t repetitions = 1;
  std::string output;

  std::vector<int> offsets{kFreshFeatures, 0, 3};                    // staleness
  std::vector<std::pair<int, int>> pairs{{kFreshFeatures, 0}, {0, 0}};  // blending
  std::vector<double> deltas{0.0, 0.1, 0.2, 0.3};                     // pareto
  std::vector<std::size_t> intervals{4, 3, 2};
  std::vector<double> thresholds{0.70, 0.75, 0.80};
  std::vector<double> fixed_deltas{0.1, 0.2};
  std::vector<double> ratios{0.0, 0.25, 0.5, 0.75, 1.0};              // replace
  std::size_t max_distance = 16;                                      // features

  void validate() const;
};

// Unknown keys are errors. Lines are "key = value"; '#' starts a comment.
ExperimentSpec parse_spec(std::istream& in);
ExperimentSpec load_spec(const std::string& path);

struct ResultRow {
  std::string spec;
  std::string experiment;
  std::size_t cell = 0;
  std::size_t rep = 0;
  std::string params;  // "key=value;key=value" for the cell
  std::string pipeline;
  std::uint64_t seed = 0;
  std::uint64_t model_seed = 0;
  TraceCounters counters;
  std::size_t iterations = 0;
  Metrics metrics;
  std::optional<double> mal_ratio;  // staleness/blending: MAL over the fresh run of the same rep
  std::string note;                 // reason a cell was skipped, else empty
};

std::string result_csv_header();
std::string result_csv_row(const ResultRow& row);

// Seeds for repetition rep: paired across cells so comparisons share draws.
std::uint64_t rep_seed(std::uint64_t base, std::size_t rep);
std::uint64_t rep_model_seed(std::uint64_t base, std::size_t rep);

// Runs every (cell, rep) with up to jobs threads. When csv is given, the
// header and rows are written in (cell, rep) order as soon as each prefix
// is complete.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, std::size_t jobs = 1,
                                      std::ostream* csv = nullptr);

// Plain-text table of per-cell means.
void write_summary(std::ostream& out, const std::vector<ResultRow>& rows);

struct SimilarityHistogram {
  static constexpr std::size_t kBins = 20;  // equal bins over [-1, 1]
  std::vector<std::size_t> bins = std::vector<std::size_t>(kBins, 0);
  std::size_t iterations = 0;   // verify iterations seen
  std::size_t degenerate = 0;   // fewer than two paths
  std::size_t above = 0;        // non-degenerate with similarity > 0.7
  std::vector<double> values;

  std::size_t counted() const { return iterations - degenerate; }
  double fraction_above() const;
};

// Stride-1 similarity at every verify iteration of runs plain speculative
// decoding runs.
SimilarityHistogram measure_path_similarity_distribution(const EngineConfig& config,
                                                         std::size_t runs);

struct DistanceSimilarity {
  std::size_t distance = 0;
  double mean_cosine = 0.0;
  std::size_t pairs = 0;
};

// Mean cosine between target features of positions at distance 1..max over
// runs seeded vanilla generations.
std::vector<DistanceSimilarity> measure_feature_similarity(const EngineConfig& config,
                                                           std::size_t max_distance,
                                                           std::size_t runs);

std::vector<ResultRow> staleness_sweep(const EngineConfig& config, const std::vector<int>& offsets,
                                       std::size_t reps, std::size_t jobs = 1);
std::vector<ResultRow> blending_sweep(const EngineConfig& config,
                                      const std::vector<std::pair<int, int>>& pairs,
                                      std::size_t reps, std::size_t jobs = 1);
std::vector<ResultRow> pareto_sweep(const EngineConfig& config, const std::vector<double>& deltas,
                                    const std::vector<std::size_t>& intervals,
                                    const std::vector<double>& thresholds, std::size_t reps,
                                    std::size_t jobs = 1);
std::vector<ResultRow> replace_sweep(const EngineConfig& config, const std::vector<double>& ratios,
                                     std::size_t reps, std::size_t jobs = 1);

// Runs the analysis experiments (similarity, features, cache) and writes
// their CSV to out.
void run_analysis(const ExperimentSpec& spec, std::ostream& out);

}  // namespace vvs
