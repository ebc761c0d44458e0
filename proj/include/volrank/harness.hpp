#pragma once
// Experiment orchestration: study configuration, the Monte Carlo study runner
// producing level/power/normality tables, CSV ingestion, and JSON/CSV
// serialization of every report type.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "volrank/itosim.hpp"
#include "volrank/limitlaw.hpp"
#include "volrank/ranktest.hpp"
#include "volrank/stats.hpp"

namespace volrank::harness {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutDirEnvVar = "VOLRANK_OUT";

struct ConstRankConfig {
  bool enabled = false;
  double p = 1.0;
  int k_n = 0;  // 0: default_kn rule
};

struct StudyConfig {
  itosim::ScenarioParams scenario;
  double t_max = 1.0;
  int n_obs = 20000;
  int refine = 8;
  Matrix theta;  // empty: identity
  std::vector<double> alphas{0.05};
  std::vector<ranktest::HypothesisSpec> hypotheses;
  ConstRankConfig const_rank;
  int n_paths = 100;
  std::uint64_t master_seed = 1;
  std::string out_dir;

  void validate() const;
};

struct PathOutcome {
  int index = 0;
  bool ok = false;
  std::string error;
  ranktest::RankTestReport report;
  bool has_const_rank = false;
  ranktest::ConstRankReport const_rank;
  std::vector<ranktest::ConstRankDecision> const_rank_decisions;
  double median_spot = 0.0;
};

struct LevelPowerCell {
  std::string hypothesis;
  double alpha = 0.0;
  double reject_freq = 0.0;
  double se = 0.0;
  int n = 0;
};

struct NormalityCell {
  std::string hypothesis;
  double ks = 0.0;
  double p = 0.0;
};

struct StudyAggregates {
  int n_paths = 0;
  int n_ok = 0;
  int n_degenerate = 0;
  int true_max_rank = 0;
  double mean_r_hat = 0.0, sd_r_hat = 0.0;
  double frac_rounded_correct = 0.0;
  std::vector<LevelPowerCell> level_power;
  std::vector<NormalityCell> normality;
  // Constant-rank summaries (zero when the test is disabled).
  double mean_b = 0.0, sd_b = 0.0, mean_z = 0.0;
  std::vector<LevelPowerCell> const_rank_level;
  double mean_median_spot = 0.0;
};

struct StudyResult {
  StudyConfig config;
  std::string version;
  std::string config_hash;
  std::vector<PathOutcome> paths;
  StudyAggregates aggregates;
};

// Runs n_paths independent pipelines with per-path derived seeds and
// aggregates deterministically (fixed path order) for any thread count.
StudyResult run_study(const StudyConfig& config, limitlaw::Exec exec = limitlaw::Exec::parallel,
                      int threads = 0);

// Aggregation is a pure function of the per-path outcomes.
StudyAggregates aggregate(const StudyConfig& config, const std::vector<PathOutcome>& paths);

// CSV ingestion: header t,x_1..x_d, equidistant grid (1e-9 relative jitter).
// delta_n <= 0 infers the step from the time column.
itosim::PathSample ingest_csv(const std::string& file, double delta_n = 0.0);

// One-sample Kolmogorov-Smirnov against the standard normal; >= 20 samples.
stats::KsResult ks_normality(const std::vector<double>& samples);

// ---- serialization ----------------------------------------------------------

nlohmann::json to_json(const ranktest::TestDecision& d);
nlohmann::json to_json(const ranktest::RankTestReport& r);
nlohmann::json to_json(const ranktest::ConstRankReport& r, bool include_series = false);
nlohmann::json to_json(const PathOutcome& p);
nlohmann::json to_json(const StudyAggregates& a);
nlohmann::json to_json(const StudyConfig& c);
nlohmann::json to_json(const StudyResult& r);

StudyConfig study_config_from_json(const nlohmann::json& j);
ranktest::RankTestReport rank_report_from_json(const nlohmann::json& j);
PathOutcome path_outcome_from_json(const nlohmann::json& j);

std::uint64_t fnv1a64(const std::string& s);
std::string config_hash(const StudyConfig& c);

// Writes study_result.json plus level_power.csv / normality.csv /
// spot_series.csv under dir (created if needed).
void write_study_outputs(const StudyResult& result, const std::string& dir);

// Per-block audit trail: columns i,f1,f2.
void write_blocks_csv(const ranktest::PerturbedBlocks& blocks, const std::string& file);

}  // namespace volrank::harness
